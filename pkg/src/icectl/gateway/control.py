"""Single-writer control loop tying plant, planner, and compensation together.

All mutation happens through ``handle_message`` and ``tick`` on one executor;
the service layer only passes messages in and snapshots out. Messages follow
a versioned schema (``v`` field); unknown kinds are rejected, unknown extra
fields ignored. While a recovery path is executing, jog/set/save/recover
messages are rejected until completion or an explicit abort: exactly one
actuation source at a time.
"""

from __future__ import annotations

from dataclasses import dataclass

from icectl.compensation import ElasticityMap
from icectl.kinematics import Config, TipPose, WorkspaceError, config_to_bend, forward
from icectl.gateway.session import SessionWriter
from icectl.planner import (
    NotOnRoadmapError,
    Roadmap,
    UnknownViewError,
    UnreachableError,
    ViewLibrary,
    query,
    quantize,
    save_view,
)
from icectl.plant import PlantModel, measure

PROTOCOL_VERSION = 1
DEFAULT_JOG_LIMIT_DEG = 5.0
# Per-tick actuator slew (deg or mm per channel). Keeping it at half the
# default roadmap epsilon guarantees consecutive observed states stay within
# epsilon, so user traces always form connected roadmap paths.
DEFAULT_SLEW_PER_TICK = 0.5

_KINDS = (
    "jog",
    "set_config",
    "save_view",
    "recover",
    "abort",
    "set_compensation",
    "query_state",
)


def _error(message: str, cause: str = None) -> dict:
    frame = {"v": PROTOCOL_VERSION, "kind": "error", "message": message}
    if cause:
        frame["cause"] = cause
    return frame


@dataclass
class _Recovery:
    view_id: str
    waypoints: tuple
    emitted: int = 0


class ControlLoop:
    def __init__(
        self,
        plant: PlantModel,
        emap: ElasticityMap = None,
        jog_limit_deg: float = DEFAULT_JOG_LIMIT_DEG,
        slew_per_tick: float = DEFAULT_SLEW_PER_TICK,
        session_id: str = "session",
    ):
        self.plant = plant
        self.params = plant.params
        self.emap = emap
        self.compensation_enabled = False
        self.jog_limit_deg = jog_limit_deg
        self.slew_per_tick = slew_per_tick
        self.roadmap = Roadmap()
        self.views = ViewLibrary()
        self.recovery: _Recovery = None
        self.tick_count = 0
        self.writer = SessionWriter(session_id, plant)
        self.desired = Config(0.0, 0.0, 0.0, 0.0)
        self.commanded = quantize(self.desired)
        self.last_sample = measure(self.commanded, self.plant)
        self.writer.command(0, self.commanded, "init")
        self.writer.sample(0, self.last_sample)
        self.roadmap.observe(self.commanded)

    # -- actuation ---------------------------------------------------------

    def _command(self, q: Config, source: str):
        qq = quantize(q)
        if qq == self.commanded:
            return
        self.commanded = qq
        self.last_sample = measure(qq, self.plant)
        self.writer.command(self.tick_count, qq, source)
        self.writer.sample(self.tick_count, self.last_sample)
        self.roadmap.observe(qq)

    def _target(self) -> Config:
        """Motor target for the current desired state (compensated if enabled)."""
        d = self.desired
        if self.compensation_enabled and self.emap is not None:
            c1, c2 = self.emap.apply(d.phi1, d.phi2)
            return quantize(Config(c1, c2, d.phi3, d.d4))
        return quantize(d)

    def is_settled(self) -> bool:
        return self.recovery is None and self.commanded == self._target()

    def _slew_toward(self, target: Config):
        """One bounded actuator step from the commanded config toward target.

        The per-tick step keeps consecutive observed states within the
        roadmap's edge range, so manual traces stay connected.
        """
        step = self.slew_per_tick
        cur = self.commanded.as_array()
        tgt = target.as_array()
        delta = tgt - cur
        clipped = [max(-step, min(step, d)) for d in delta]
        nxt = Config(*(c + d for c, d in zip(cur, clipped)))
        self._command(nxt, "slew")

    # -- message handling ----------------------------------------------------

    def handle_message(self, msg) -> list:
        if not isinstance(msg, dict):
            return [_error("message must be a JSON object")]
        if msg.get("v") != PROTOCOL_VERSION:
            return [_error(f"unsupported protocol version {msg.get('v')!r}")]
        kind = msg.get("kind")
        if kind not in _KINDS:
            return [_error(f"unknown message kind {kind!r}")]
        handler = getattr(self, f"_on_{kind}")
        try:
            return handler(msg)
        except (WorkspaceError, NotOnRoadmapError, UnreachableError, ValueError) as e:
            return [_error(str(e))]
        except UnknownViewError as e:
            return [_error(f"unknown view {e.args[0]!r}")]

    def _reject_if_recovering(self):
        if self.recovery is not None:
            return [_error("recovery in progress; send abort first")]
        return None

    def _on_jog(self, msg):
        busy = self._reject_if_recovering()
        if busy:
            return busy
        deltas = []
        for key in ("dphi1", "dphi2", "dphi3", "dd4"):
            v = msg.get(key, 0.0)
            if not isinstance(v, (int, float)):
                return [_error(f"jog field {key} must be a number")]
            deltas.append(float(v))
        if abs(deltas[0]) > self.jog_limit_deg or abs(deltas[1]) > self.jog_limit_deg:
            return [_error(f"jog exceeds the {self.jog_limit_deg:g} deg rate limit")]
        d = self.desired
        nd = Config(d.phi1 + deltas[0], d.phi2 + deltas[1], d.phi3 + deltas[2], d.d4 + deltas[3])
        self.params.check_workspace(nd)
        self.desired = nd
        return []

    def _on_set_config(self, msg):
        busy = self._reject_if_recovering()
        if busy:
            return busy
        c = msg.get("config")
        if not isinstance(c, dict):
            return [_error("set_config needs a config object")]
        try:
            q = Config(
                float(c.get("phi1", 0.0)),
                float(c.get("phi2", 0.0)),
                float(c.get("phi3", 0.0)),
                float(c.get("d4", 0.0)),
            )
        except (TypeError, ValueError) as e:
            return [_error(f"bad config payload: {e}")]
        self.params.check_workspace(q)
        self.desired = q
        return []

    def _on_save_view(self, msg):
        busy = self._reject_if_recovering()
        if busy:
            return busy
        label = str(msg.get("label", ""))
        self.roadmap.observe(self.commanded)
        save_view(self.commanded, label, self.views, self.roadmap)
        view = self.views.views[-1]
        self.writer.save_view(self.tick_count, view.view_id, view.label, view.config)
        return [
            {
                "v": PROTOCOL_VERSION,
                "kind": "view_saved",
                "view_id": view.view_id,
                "label": view.label,
            }
        ]

    def _on_recover(self, msg):
        busy = self._reject_if_recovering()
        if busy:
            return busy
        view_id = msg.get("view_id")
        if not isinstance(view_id, str):
            return [_error("recover needs a view_id string")]
        path = query(self.commanded, view_id, self.roadmap, self.views)
        self.recovery = _Recovery(view_id=view_id, waypoints=path.waypoints)
        self.writer.recover_request(self.tick_count, view_id, len(path.waypoints), path.total_cost)
        return []

    def _on_abort(self, msg):
        if self.recovery is None:
            return [_error("no recovery in progress")]
        r = self.recovery
        self.recovery = None
        self.writer.recover_done(self.tick_count, r.view_id, r.emitted, True)
        return []

    def _on_set_compensation(self, msg):
        enabled = msg.get("enabled")
        if not isinstance(enabled, bool):
            return [_error("set_compensation needs a boolean 'enabled'")]
        if enabled and self.emap is None:
            return [_error("no elasticity map loaded")]
        self.compensation_enabled = enabled
        self.writer.set_compensation(self.tick_count, enabled)
        return []

    def _on_query_state(self, msg):
        return [self.snapshot()]

    # -- ticking -------------------------------------------------------------

    def tick(self) -> dict:
        """Advance one control period and return the state snapshot.

        A pending recovery replays exactly one recorded waypoint per tick
        (verbatim: no compensation, no slew shaping). Otherwise the actuator
        slews one bounded step toward the desired state.
        """
        self.tick_count += 1
        if self.recovery is not None:
            r = self.recovery
            if r.emitted < len(r.waypoints):
                self._command(r.waypoints[r.emitted], "path")
                r.emitted += 1
            if r.emitted >= len(r.waypoints):
                self.recovery = None
                self.desired = self.commanded
                self.writer.recover_done(self.tick_count, r.view_id, r.emitted, False)
        else:
            target = self._target()
            if self.commanded != target:
                self._slew_toward(target)
        self.roadmap.observe(self.commanded)
        return self.snapshot()

    def snapshot(self) -> dict:
        bend = config_to_bend(self.commanded, self.params)
        tip = forward(self.commanded, self.params)
        meas = self.last_sample.measured_pose
        return {
            "v": PROTOCOL_VERSION,
            "kind": "state",
            "tick": self.tick_count,
            "session_id": self.writer.session_id,
            "config": _config_dict(self.commanded),
            "desired": _config_dict(self.desired),
            "settled": self.is_settled(),
            "bend": {
                "theta_deg": bend.theta_deg,
                "alpha_deg": bend.alpha_deg,
                "radius_mm": bend.radius_mm if bend.alpha_deg > 1e-9 else None,
                "length_mm": self.params.bend_length_mm,
            },
            "tip": _pose_dict(tip),
            "plant_tip": _pose_dict(meas),
            "roadmap": {
                "vertices": len(self.roadmap.vertices),
                "edges": self.roadmap.edge_count,
            },
            "views": [
                {"id": v.view_id, "label": v.label, "config": _config_dict(v.config)}
                for v in self.views.views
            ],
            "recovery": (
                None
                if self.recovery is None
                else {
                    "view_id": self.recovery.view_id,
                    "emitted": self.recovery.emitted,
                    "total": len(self.recovery.waypoints),
                }
            ),
            "compensation": {
                "enabled": self.compensation_enabled,
                "available": self.emap is not None,
            },
        }


def _config_dict(q: Config) -> dict:
    return {"phi1": q.phi1, "phi2": q.phi2, "phi3": q.phi3, "d4": q.d4}


def _pose_dict(pose: TipPose) -> dict:
    return {
        "position": [float(x) for x in pose.position],
        "rotation": [[float(x) for x in row] for row in pose.rotation],
    }
