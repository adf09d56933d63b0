"""Command-line entry points for batch experiments against the simulated catheter.

Subcommands:
  calibrate      learn an elasticity map (dense raster or five-point) -> map file
  spin           run an image-spin scenario, write metrics + trajectory tables
  record         execute a message script through the control loop -> session log
  replay         re-run a session's commands on a fresh seeded plant and verify
  recover-bench  repeated view recoveries, report the positioning spread
  serve          start the live WebSocket control service

All outputs are deterministic given the seed flags: tables carry no wall-clock
content and floats serialise with shortest round-trip repr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from icectl.compensation import (
    CalibrationError,
    ElasticityMap,
    build_map,
    collect_five_point,
    collect_grid,
)
from icectl.gateway.configio import load_plant
from icectl.gateway.control import ControlLoop
from icectl.gateway.session import (
    SessionWriter,
    plant_of_session,
    read_session,
    sample_lines,
)
from icectl.kinematics import Config, forward
from icectl.plant import PlantModel, measure
from icectl.planner import Roadmap, ViewLibrary, execute, query, save_view
from icectl.trajectories import SpinSpec, repeat_spread, run_and_score, spin_trajectory


def _write_table(path: Path, header, rows):
    lines = ["\t".join(header)]
    for row in rows:
        lines.append(
            "\t".join(repr(float(v)) if isinstance(v, float) else str(v) for v in row)
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _plant_from_args(args) -> PlantModel:
    plant = load_plant(args.plant) if args.plant else PlantModel()
    if getattr(args, "curvature", None):
        from icectl.plant import CurvatureCondition

        plant.curvature = CurvatureCondition.named(args.curvature)
    if getattr(args, "seed", None) is not None:
        plant.seed = args.seed
    if getattr(args, "noise_mm", None) is not None or getattr(args, "noise_deg", None) is not None:
        pos = args.noise_mm if args.noise_mm is not None else plant.noise_sd[0]
        ori = args.noise_deg if args.noise_deg is not None else plant.noise_sd[1]
        plant.noise_sd = (pos, ori)
    plant.reset_noise()
    return plant


def _build_calibration(plant: PlantModel, mode: str, spacing: float):
    if mode == "dense":
        return collect_grid(plant, spacing)
    if mode == "five-point":
        return collect_five_point(plant)
    raise ValueError(f"unknown calibration mode {mode!r}")


def cmd_calibrate(args) -> int:
    plant = _plant_from_args(args)
    try:
        cal = _build_calibration(plant, args.mode, args.spacing)
    except CalibrationError as e:
        print(f"calibration failed: {e}", file=sys.stderr)
        return 2
    emap = build_map(cal, plant.params, args.resolution)
    emap.save(args.out)
    print(f"wrote {args.out} ({cal.source}, {emap.node_count()} nodes)")
    return 0


def cmd_spin(args) -> int:
    plant = _plant_from_args(args)
    emap = None
    if args.map:
        emap = ElasticityMap.load(args.map)
    elif args.compensation != "none":
        try:
            cal = _build_calibration(plant, args.compensation, args.spacing)
        except CalibrationError as e:
            print(f"calibration failed: {e}", file=sys.stderr)
            return 2
        emap = build_map(cal, plant.params, args.resolution)
    initial = (args.initial, args.initial2)
    spec = SpinSpec(
        initial=initial, sweep_deg=args.sweep, step_count=args.steps, compensation=emap
    )
    traj = spin_trajectory(spec, plant.params)
    reference = forward(Config(initial[0], initial[1], 0.0, 0.0), plant.params)
    plant.reset_noise()
    metrics = run_and_score(traj, plant, reference)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    comp_label = args.map or args.compensation
    _write_table(
        out / "metrics.tsv",
        ["compensation", "curvature", "initial_deg", "steps", "seed", "position_rmse_mm", "orientation_rmse_deg"],
        [[comp_label, plant.curvature.label, args.initial, args.steps, plant.seed,
          metrics.position_rmse_mm, metrics.orientation_rmse_deg]],
    )
    rows = []
    for k, q in enumerate(traj.steps):
        x, y, z = metrics.measured_positions_mm[k]
        rows.append(
            [k, k * traj.spin_step_deg, q.phi1, q.phi2, q.phi3, q.d4, x, y, z,
             metrics.position_errors_mm[k], metrics.orientation_errors_deg[k]]
        )
    _write_table(
        out / "trajectory.tsv",
        ["step", "psi_deg", "phi1", "phi2", "phi3", "d4", "tip_x", "tip_y", "tip_z", "err_mm", "err_deg"],
        rows,
    )
    print(
        f"spin initial={args.initial:g} comp={comp_label} curvature={plant.curvature.label}: "
        f"position RMSE {metrics.position_rmse_mm:.3f} mm, "
        f"orientation RMSE {metrics.orientation_rmse_deg:.3f} deg"
    )
    return 0


def cmd_record(args) -> int:
    plant = _plant_from_args(args)
    emap = ElasticityMap.load(args.map) if args.map else None
    loop = ControlLoop(plant, emap=emap, session_id=args.session_id)
    script = []
    with open(args.script, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                script.append(json.loads(line))
    for msg in script:
        replies = loop.handle_message(msg)
        for r in replies:
            if r.get("kind") == "error":
                print(f"script message rejected: {r['message']}", file=sys.stderr)
        # each script line runs to completion: slew to the desired state or
        # finish the recovery before the next message applies
        loop.tick()
        guard = 0
        while not loop.is_settled():
            loop.tick()
            guard += 1
            if guard > 100000:
                print("script step did not settle", file=sys.stderr)
                return 3
    loop.writer.write(args.out)
    print(f"wrote {args.out} ({len(loop.writer.records)} records)")
    return 0


def cmd_replay(args) -> int:
    records = read_session(args.session)
    plant = plant_of_session(records)
    writer = SessionWriter(records[0]["session_id"], plant)
    for r in records[1:]:
        if r["kind"] == "command":
            q = Config.from_array(r["config"])
            writer.command(r["tick"], q, r["source"])
            writer.sample(r["tick"], measure(q, plant))
        elif r["kind"] == "sample":
            continue
        else:
            writer._append(r)
    writer.write(args.out)
    original = sample_lines(records)
    replayed = sample_lines(writer.records)
    if original == replayed:
        print(f"replay OK: {len(replayed)} samples bitwise identical")
        return 0
    print("replay MISMATCH: EM samples differ from the recording", file=sys.stderr)
    return 1


def cmd_recover_bench(args) -> int:
    plant = _plant_from_args(args)
    rng = np.random.default_rng(plant.seed)
    g = Roadmap()
    views = ViewLibrary()

    # Trace a seeded random walk through the workspace, saving views along it.
    x = np.zeros(4)
    trace = [Config(0.0, 0.0, 0.0, 0.0)]
    g.observe(trace[0])
    steps = max(40 * args.views, 200)
    for _ in range(steps):
        x = x + rng.uniform(-0.45, 0.45, 4)
        x[:2] = np.clip(x[:2], -plant.params.workspace_deg, plant.params.workspace_deg)
        q = Config(*x)
        g.observe(q)
        trace.append(q)
    save_at = np.linspace(len(trace) // args.views, len(trace) - 1, args.views).astype(int)
    for i, idx in enumerate(save_at):
        save_view(trace[idx], f"bench-{i + 1}", views, g)
    home = trace[0]

    home_id = _home_id(views, g, home)
    rows = []
    summary = []
    all_dists = []
    current = quantize_cfg(trace[-1])
    for view in views.views:
        if view.view_id == home_id:
            continue
        final_poses = []
        final_configs = []
        for rep in range(args.repeats):
            # two-leg recovery per repeat: current -> home -> view, with an
            # EM measurement at every replayed waypoint
            last = []
            for target in (home_id, view.view_id):
                path = query(current, target, g, views)
                execute(path, lambda q: last.append(measure(q, plant)) or True)
                current = path.waypoints[-1]
            final_poses.append(last[-1].measured_pose)
            final_configs.append(current)
        exact = all(c == final_configs[0] for c in final_configs)
        spread = repeat_spread(final_poses)
        summary.append([view.view_id, args.repeats, spread.mean_mm, spread.sd_mm, exact])
        all_dists.extend(spread.distances_mm)
        for rep, pose in enumerate(final_poses):
            x_, y_, z_ = (float(v) for v in pose.position)
            rows.append([view.view_id, rep, x_, y_, z_])

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_table(out / "recoveries.tsv", ["view_id", "repeat", "tip_x", "tip_y", "tip_z"], rows)
    _write_table(
        out / "spread.tsv",
        ["view_id", "repeats", "mean_mm", "sd_mm", "configs_bitwise_equal"],
        summary,
    )
    pooled = float(np.mean(all_dists)) if all_dists else 0.0
    print(
        f"{args.views} views x {args.repeats} repeats: pooled mean spread {pooled:.3f} mm "
        f"(noise {plant.noise_sd[0]:g} mm / {plant.noise_sd[1]:g} deg)"
    )
    return 0


def _home_id(views: ViewLibrary, g: Roadmap, home: Config) -> str:
    for v in views.views:
        if v.label == "__home__":
            return v.view_id
    save_view(home, "__home__", views, g)
    return views.views[-1].view_id


def quantize_cfg(q: Config) -> Config:
    from icectl.planner import quantize

    return quantize(q)


def cmd_serve(args) -> int:
    import uvicorn

    from icectl.gateway.service import create_app

    plant = _plant_from_args(args)
    emap = ElasticityMap.load(args.map) if args.map else None
    loop = ControlLoop(plant, emap=emap, session_id=args.session_id)
    app = create_app(loop, tick_hz=args.tick_hz, session_log=args.session_log)
    print(f"serving on ws://{args.host}:{args.port}/ws (tick {args.tick_hz:g} Hz)", flush=True)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="icectl", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def add_plant_flags(p, curvature=True, noise=True):
        p.add_argument("--plant", help="plant config file (TOML)")
        p.add_argument("--seed", type=int, default=None, help="override plant seed")
        if curvature:
            p.add_argument("--curvature", choices=["straight", "moderate", "steep"], default=None)
        if noise:
            p.add_argument("--noise-mm", type=float, default=None, dest="noise_mm")
            p.add_argument("--noise-deg", type=float, default=None, dest="noise_deg")

    p = sub.add_parser("calibrate", help="learn an elasticity map")
    add_plant_flags(p)
    p.add_argument("--mode", choices=["dense", "five-point"], required=True)
    p.add_argument("--spacing", type=float, default=10.0, help="dense raster spacing (deg)")
    p.add_argument("--resolution", type=float, default=1.0, help="map grid resolution (deg)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("spin", help="image-spin scenario with metrics tables")
    add_plant_flags(p)
    p.add_argument("--initial", type=float, default=60.0, help="initial phi1 (deg)")
    p.add_argument("--initial2", type=float, default=0.0, help="initial phi2 (deg)")
    p.add_argument("--steps", type=int, default=360)
    p.add_argument("--sweep", type=float, default=360.0)
    p.add_argument("--compensation", choices=["none", "dense", "five-point"], default="none")
    p.add_argument("--map", help="use a saved elasticity map instead of calibrating")
    p.add_argument("--spacing", type=float, default=10.0)
    p.add_argument("--resolution", type=float, default=1.0)
    p.add_argument("--out-dir", default="spin-out", dest="out_dir")
    p.set_defaults(func=cmd_spin)

    p = sub.add_parser("record", help="run a message script into a session log")
    add_plant_flags(p)
    p.add_argument("--script", required=True, help="JSONL control messages")
    p.add_argument("--map", help="elasticity map for compensated jogs")
    p.add_argument("--session-id", default="session", dest="session_id")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_record)

    p = sub.add_parser("replay", help="re-run a recorded session and verify samples")
    p.add_argument("--session", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("recover-bench", help="repeated view recoveries, spread report")
    add_plant_flags(p)
    p.add_argument("--views", type=int, default=3)
    p.add_argument("--repeats", type=int, default=7)
    p.add_argument("--out-dir", default="recover-out", dest="out_dir")
    p.set_defaults(func=cmd_recover_bench)

    p = sub.add_parser("serve", help="start the live control service")
    add_plant_flags(p)
    p.add_argument("--map", help="elasticity map available for compensation")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8732)
    p.add_argument("--tick-hz", type=float, default=50.0, dest="tick_hz")
    p.add_argument("--session-id", default="live", dest="session_id")
    p.add_argument("--session-log", default=None, dest="session_log",
                   help="write the session event log here on shutdown")
    p.set_defaults(func=cmd_serve)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
