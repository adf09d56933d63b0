"""Synthetic ground-truth catheter.

Stands in for the physical catheter plus its EM tip tracker: it distorts the
ideal constant-curvature kinematics with a configurable non-linear elasticity
field, adds a vessel-curvature-dependent pose bias, and (in ``measure``) a
seeded Gaussian measurement noise. It is the only source of randomness in the
project; everything downstream is deterministic given the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from icectl.kinematics import (
    CatheterParams,
    Config,
    TipPose,
    _RAD,
    config_to_bend,
    forward,
    rodrigues,
)

# Normalisation scale for the gain polynomial and twist growth: arc angles are
# expressed as a fraction of a 90 deg bend.
_ALPHA_SCALE_DEG = 90.0

_CURVATURE_PRESETS = {
    "straight": (0.0, 0.0),
    "moderate": (30.0, 30.0),
    "steep": (40.0, 45.0),
}


@dataclass(frozen=True)
class DistortionField:
    """Non-linear elasticity model of the bending section.

    ``alpha_gain`` are polynomial coefficients of the arc-angle gain g in the
    normalised angle a = alpha/90deg: the realised arc angle is
    ``g(a) * alpha``. The bending plane deviates by
    ``twist_amplitude_deg * sin(twist_harmonic * theta) * a`` and the knob
    angles are scaled per axis by ``axis_scale`` before the arc mapping.
    g is unconstrained at 0 because the straight pose is a structural fixed
    point (alpha = 0 regardless of gain).
    """

    alpha_gain: tuple = (1.0, -0.15)
    twist_amplitude_deg: float = 8.0
    twist_harmonic: int = 2
    axis_scale: tuple = (1.0, 1.0)
    twist_bound_deg: float = 10.0

    def __post_init__(self):
        if not all(math.isfinite(c) for c in self.alpha_gain):
            raise ValueError("alpha_gain coefficients must be finite")
        if abs(self.twist_amplitude_deg) > self.twist_bound_deg:
            raise ValueError(
                f"twist amplitude {self.twist_amplitude_deg} deg exceeds the "
                f"+/-{self.twist_bound_deg} deg bound"
            )
        if len(self.axis_scale) != 2 or any(s <= 0 for s in self.axis_scale):
            raise ValueError("axis_scale must be two positive factors")

    def gain(self, alpha_deg: float) -> float:
        a = alpha_deg / _ALPHA_SCALE_DEG
        return float(sum(c * a**i for i, c in enumerate(self.alpha_gain)))

    def twist_deg(self, theta_deg: float, alpha_deg: float) -> float:
        return (
            self.twist_amplitude_deg
            * math.sin(self.twist_harmonic * theta_deg * _RAD)
            * (alpha_deg / _ALPHA_SCALE_DEG)
        )

    @staticmethod
    def identity() -> "DistortionField":
        return DistortionField(alpha_gain=(1.0,), twist_amplitude_deg=0.0)


@dataclass(frozen=True)
class CurvatureCondition:
    """Vessel curvature the catheter body passes through: two arc angles (deg)."""

    label: str
    arc_angles_deg: tuple

    def __post_init__(self):
        preset = _CURVATURE_PRESETS.get(self.label)
        if preset is None:
            raise ValueError(f"unknown curvature label {self.label!r}")
        if tuple(float(a) for a in self.arc_angles_deg) != preset:
            raise ValueError(f"{self.label} condition must have arc angles {preset}")

    @staticmethod
    def named(label: str) -> "CurvatureCondition":
        return CurvatureCondition(label, _CURVATURE_PRESETS[label])

    @property
    def severity(self) -> float:
        """Sum of the two arc angles over the steepest preset's 85 deg."""
        return sum(self.arc_angles_deg) / 85.0


@dataclass
class PlantModel:
    """Distorted catheter plus EM-tracker noise model.

    ``noise_sd`` is (per-axis position sd in mm, orientation angle sd in deg).
    The curvature bias is a fixed rigid offset growing with the vessel arc
    angles: ``bias_mm * severity`` along ``bias_dir`` and a rotation of
    ``ori_bias_deg * severity`` about ``ori_bias_axis``.
    """

    params: CatheterParams = field(default_factory=CatheterParams)
    distortion: DistortionField = field(default_factory=DistortionField)
    curvature: CurvatureCondition = field(default_factory=lambda: CurvatureCondition.named("straight"))
    noise_sd: tuple = (0.0, 0.0)
    seed: int = 0
    bias_mm: float = 1.5
    bias_dir: tuple = (1.0, 0.0, 0.0)
    ori_bias_deg: float = 4.0
    ori_bias_axis: tuple = (1.0, 0.0, 0.0)

    def __post_init__(self):
        if self.noise_sd[0] < 0 or self.noise_sd[1] < 0:
            raise ValueError("noise_sd components must be >= 0")
        self._rng = np.random.default_rng(self.seed)
        self._tick = 0

    def reset_noise(self):
        """Rewind the measurement stream to the seeded start."""
        self._rng = np.random.default_rng(self.seed)
        self._tick = 0

    def clone(self) -> "PlantModel":
        return PlantModel(
            params=self.params,
            distortion=self.distortion,
            curvature=self.curvature,
            noise_sd=self.noise_sd,
            seed=self.seed,
            bias_mm=self.bias_mm,
            bias_dir=self.bias_dir,
            ori_bias_deg=self.ori_bias_deg,
            ori_bias_axis=self.ori_bias_axis,
        )


@dataclass(frozen=True)
class EMSample:
    """One tracked tip pose for a commanded joint state."""

    config: Config
    measured_pose: TipPose
    timestamp: int


def plant_forward(q: Config, m: PlantModel) -> TipPose:
    """Deterministic real tip pose of the distorted catheter."""
    p = m.params
    p.check_workspace(q)
    d = m.distortion
    # Distorted arc parameters can leave the command workspace (that is the
    # point of the distortion); the arc model itself stays valid, so the
    # intermediate kinematics run with a relaxed bound.
    relaxed = CatheterParams(
        bend_length_mm=p.bend_length_mm,
        knob_radius_mm=p.knob_radius_mm,
        catheter_radius_mm=p.catheter_radius_mm,
        workspace_deg=max(p.workspace_deg * 4.0, 360.0),
        us_offset=p.us_offset,
    )
    scaled = Config(q.phi1 * d.axis_scale[0], q.phi2 * d.axis_scale[1], q.phi3, q.d4)
    bend = config_to_bend(scaled, relaxed)
    alpha = d.gain(bend.alpha_deg) * bend.alpha_deg
    theta = bend.theta_deg + d.twist_deg(bend.theta_deg, bend.alpha_deg)
    # Re-enter the ideal kinematics with the distorted arc parameters by
    # synthesising the equivalent knob pair.
    knob = alpha / p.knob_ratio
    eq = Config(
        knob * math.cos(theta * _RAD),
        knob * math.sin(theta * _RAD),
        q.phi3,
        q.d4,
    )
    pose = forward(eq, relaxed)

    s = m.curvature.severity
    if s == 0.0:
        return pose
    u = np.asarray(m.bias_dir, dtype=float)
    u = u / np.linalg.norm(u)
    axis = np.asarray(m.ori_bias_axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    position = pose.position + m.bias_mm * s * u
    rotation = rodrigues(axis, m.ori_bias_deg * s) @ pose.rotation
    return TipPose(position, rotation)


def measure(q: Config, m: PlantModel) -> EMSample:
    """Noisy EM sample of the real tip pose; advances the seeded noise stream.

    Exactly seven normal variates are drawn per call regardless of the noise
    settings, so streams with different noise levels stay index-aligned.
    """
    pose = plant_forward(q, m)
    pos_noise = m._rng.normal(0.0, 1.0, 3)
    axis = m._rng.normal(0.0, 1.0, 3)
    angle = m._rng.normal(0.0, 1.0)
    sd_mm, sd_deg = m.noise_sd
    position = pose.position
    rotation = pose.rotation
    if sd_mm > 0.0:
        position = position + sd_mm * pos_noise
    if sd_deg > 0.0:
        n = np.linalg.norm(axis)
        if n < 1e-12:
            axis = np.array([0.0, 0.0, 1.0])
            n = 1.0
        rotation = rodrigues(axis / n, sd_deg * angle) @ rotation
    m._tick += 1
    return EMSample(config=q, measured_pose=TipPose(position, rotation), timestamp=m._tick)
