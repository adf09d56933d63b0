"""Image-spinning trajectories and the validation metrics run against the plant.

A spin revolves the ultrasound plane about the catheter axis while holding
the tip position: the knob pair traces A*cos / A*sin around the initial
bending azimuth while the bulk roll counter-rotates linearly. Scoring
compares noisy plant measurements against the ideal spin poses (constant
position, image frame rotating about the tip axis).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from icectl.compensation import ElasticityMap, smooth
from icectl.kinematics import (
    CatheterParams,
    Config,
    TipPose,
    geodesic_angle_deg,
    rodrigues,
)
from icectl.plant import PlantModel, measure

DEFAULT_RATE_LIMIT_DEG = 5.0
_SMOOTH_WINDOW = 11
_SMOOTH_ORDER = 2


class TrajectoryError(ValueError):
    """Trajectory violates the workspace or per-step rate limit."""


@dataclass(frozen=True)
class SpinSpec:
    """Image-spin request: initial knob pair, sweep and step count.

    ``compensation`` optionally names an ElasticityMap applied to every knob
    pair (followed by Savitzky-Golay smoothing).
    """

    initial: tuple
    sweep_deg: float = 360.0
    step_count: int = 360
    compensation: ElasticityMap = None
    phi3_init: float = 0.0
    d4: float = 0.0

    def __post_init__(self):
        if self.step_count < 8:
            raise ValueError("step_count must be >= 8")
        object.__setattr__(self, "initial", (float(self.initial[0]), float(self.initial[1])))


@dataclass(frozen=True)
class Trajectory:
    """Time-ordered joint states; ``spin_step_deg`` is the per-step image
    rotation (0 for non-spin trajectories), used when scoring."""

    steps: tuple
    dt_s: float = 0.02
    spin_step_deg: float = 0.0
    rate_limit_deg: float = DEFAULT_RATE_LIMIT_DEG

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        if not self.steps:
            raise TrajectoryError("empty trajectory")

    def validate(self, params: CatheterParams):
        for q in self.steps:
            params.check_workspace(q)
        arr = np.array([q.as_array() for q in self.steps])
        jumps = np.abs(np.diff(arr[:, :2], axis=0))
        if jumps.size and np.max(jumps) > self.rate_limit_deg + 1e-9:
            raise TrajectoryError(
                f"knob step {np.max(jumps):.3f} deg exceeds the "
                f"{self.rate_limit_deg:g} deg/step rate limit"
            )


@dataclass(frozen=True)
class RunMetrics:
    """Per-step tip errors against the reference pose and their RMS values."""

    position_rmse_mm: float
    orientation_rmse_deg: float
    position_errors_mm: tuple
    orientation_errors_deg: tuple
    measured_positions_mm: tuple = ()

    def self_check(self, tol: float = 1e-9):
        p = math.sqrt(np.mean(np.square(self.position_errors_mm)))
        o = math.sqrt(np.mean(np.square(self.orientation_errors_deg)))
        if abs(p - self.position_rmse_mm) > tol or abs(o - self.orientation_rmse_deg) > tol:
            raise AssertionError("RMSE does not match stored per-step errors")


def spin_trajectory(
    spec: SpinSpec,
    params: CatheterParams,
    rate_limit_deg: float = DEFAULT_RATE_LIMIT_DEG,
) -> Trajectory:
    """Knob/roll schedule revolving the image plane by ``sweep_deg``.

    With amplitude A = |initial| and spin angle psi_k = k*sweep/steps:
    phi1 = A*cos(psi + psi0), phi2 = A*sin(psi + psi0), phi3 decreases
    linearly by psi, d4 held. psi0 is the initial bending azimuth so the
    schedule starts exactly at ``initial``.
    """
    a = math.hypot(*spec.initial)
    if a > params.workspace_deg:
        raise TrajectoryError("initial bend outside the workspace")
    psi0 = math.atan2(spec.initial[1], spec.initial[0])
    step = spec.sweep_deg / spec.step_count
    configs = []
    for k in range(spec.step_count + 1):
        psi = math.radians(k * step)
        configs.append(
            Config(
                a * math.cos(psi + psi0),
                a * math.sin(psi + psi0),
                spec.phi3_init - k * step,
                spec.d4,
            )
        )
    if spec.compensation is not None:
        corrected = []
        for q in configs:
            c1, c2 = spec.compensation.apply(q.phi1, q.phi2)
            corrected.append(Config(c1, c2, q.phi3, q.d4))
        configs = smooth(corrected, _SMOOTH_WINDOW, _SMOOTH_ORDER)
    traj = Trajectory(
        steps=tuple(configs),
        spin_step_deg=step,
        rate_limit_deg=rate_limit_deg,
    )
    traj.validate(params)
    return traj


def run_and_score(traj: Trajectory, m: PlantModel, reference: TipPose) -> RunMetrics:
    """Drive the trajectory through the plant and score against the reference.

    The per-step reference keeps the tip position fixed and rotates the
    reference frame about its own z-axis by the accumulated spin angle;
    orientation error is the geodesic angle to that frame.
    """
    z = np.array([0.0, 0.0, 1.0])
    pos_err = []
    ori_err = []
    positions = []
    for k, q in enumerate(traj.steps):
        sample = measure(q, m)
        ref_rot = reference.rotation @ rodrigues(z, -k * traj.spin_step_deg)
        pos_err.append(float(np.linalg.norm(sample.measured_pose.position - reference.position)))
        ori_err.append(geodesic_angle_deg(sample.measured_pose.rotation, ref_rot))
        positions.append(tuple(float(x) for x in sample.measured_pose.position))
    return RunMetrics(
        position_rmse_mm=float(np.sqrt(np.mean(np.square(pos_err)))),
        orientation_rmse_deg=float(np.sqrt(np.mean(np.square(ori_err)))),
        position_errors_mm=tuple(pos_err),
        orientation_errors_deg=tuple(ori_err),
        measured_positions_mm=tuple(positions),
    )


@dataclass(frozen=True)
class SpreadReport:
    """Repeatability of recoveries: distances of each pose to the medoid pose.

    The medoid (geometric-median sample) is the pose minimising the summed
    tip distance to the others; distances exclude the medoid itself.
    """

    medoid_index: int
    distances_mm: tuple
    mean_mm: float
    sd_mm: float
    orientation_deg: tuple


def repeat_spread(poses) -> SpreadReport:
    poses = list(poses)
    if len(poses) < 2:
        raise ValueError("need at least 2 poses to measure spread")
    pts = np.array([p.position for p in poses])
    d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
    medoid = int(np.argmin(d.sum(axis=1)))
    others = [i for i in range(len(poses)) if i != medoid]
    dists = tuple(float(d[medoid, i]) for i in others)
    angles = tuple(
        geodesic_angle_deg(poses[medoid].rotation, poses[i].rotation) for i in others
    )
    return SpreadReport(
        medoid_index=medoid,
        distances_mm=dists,
        mean_mm=float(np.mean(dists)),
        sd_mm=float(np.std(dists)),
        orientation_deg=angles,
    )
