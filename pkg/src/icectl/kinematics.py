"""Closed-form constant-curvature kinematics of the 4-DOF steerable catheter.

The joint state is ``q = (phi1, phi2, phi3, d4)``: two bending knobs (deg),
bulk roll (deg) and axial translation (mm). The bending section is modelled
as a single circular arc of fixed length; the tip frame is composed as

    T_tip = T_trans(d4) . T_roll(phi3) . T_tilt(theta, alpha) . T_us

All angles cross the public API in degrees and are converted to radians in
this module only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

_RAD = math.pi / 180.0

# Below this arc angle (deg) the bend is treated as exactly straight; the
# constant-curvature expressions are 0/0 there and the analytic limit is
# position (0, 0, L) with identity tilt.
_STRAIGHT_ALPHA_DEG = 1e-9


class UnreachablePoseError(ValueError):
    """Pose is not on the constant-curvature arc manifold.

    Carries the offending residuals so callers can report how far off the
    target was: ``position_residual_mm`` and ``rotation_residual_rad``.
    """

    def __init__(self, message, position_residual_mm, rotation_residual_rad):
        super().__init__(message)
        self.position_residual_mm = float(position_residual_mm)
        self.rotation_residual_rad = float(rotation_residual_rad)


class WorkspaceError(ValueError):
    """Knob angles outside the configured workspace square."""


@dataclass(frozen=True)
class Config:
    """Robot joint state: knob angles (deg), bulk roll (deg), translation (mm)."""

    phi1: float
    phi2: float
    phi3: float = 0.0
    d4: float = 0.0

    def __post_init__(self):
        for name in ("phi1", "phi2", "phi3", "d4"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"Config.{name} must be finite, got {v!r}")
            object.__setattr__(self, name, v)

    def as_array(self) -> np.ndarray:
        return np.array([self.phi1, self.phi2, self.phi3, self.d4], dtype=float)

    @staticmethod
    def from_array(a) -> "Config":
        p1, p2, p3, d4 = (float(x) for x in a)
        return Config(p1, p2, p3, d4)


@dataclass(frozen=True)
class CatheterParams:
    """Geometry of the catheter: arc length, knob/catheter radii, image offset.

    ``knob_radius_mm / catheter_radius_mm`` scales knob angle into arc angle;
    with the default ratio of 1 a 90 deg knob input produces a 90 deg arc.
    ``us_offset`` is the fixed transform from the tip of the bending section
    to the ultrasound image centre.
    """

    bend_length_mm: float = 60.0
    knob_radius_mm: float = 10.0
    catheter_radius_mm: float = 10.0
    workspace_deg: float = 90.0
    us_offset: np.ndarray = field(default_factory=lambda: np.eye(4))

    def __post_init__(self):
        if self.bend_length_mm <= 0:
            raise ValueError("bend_length_mm must be > 0")
        if self.knob_radius_mm <= 0 or self.catheter_radius_mm <= 0:
            raise ValueError("knob and catheter radii must be > 0")
        if self.workspace_deg <= 0:
            raise ValueError("workspace_deg must be > 0")
        t = np.asarray(self.us_offset, dtype=float)
        if t.shape != (4, 4):
            raise ValueError("us_offset must be a 4x4 rigid transform")
        object.__setattr__(self, "us_offset", t)

    @property
    def knob_ratio(self) -> float:
        return self.knob_radius_mm / self.catheter_radius_mm

    def check_workspace(self, q: Config):
        w = self.workspace_deg
        if abs(q.phi1) > w + 1e-9 or abs(q.phi2) > w + 1e-9:
            raise WorkspaceError(
                f"knob angles ({q.phi1:.3f}, {q.phi2:.3f}) outside +/-{w:g} deg workspace"
            )


@dataclass(frozen=True)
class BendParams:
    """Arc description: bending-plane azimuth, arc angle (deg) and radius (mm).

    ``radius_mm`` is ``+inf`` for the straight catheter; otherwise
    ``radius * alpha == L`` (alpha in radians).
    """

    theta_deg: float
    alpha_deg: float
    radius_mm: float

    def __post_init__(self):
        if self.alpha_deg < 0:
            raise ValueError("alpha_deg must be >= 0")


@dataclass(frozen=True)
class TipPose:
    """Tip position (mm) and orientation of the catheter tip frame.

    Column 0 of ``rotation`` is the image-facing direction, column 2 the
    catheter axis at the tip.
    """

    position: np.ndarray
    rotation: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.position, dtype=float).reshape(3)
        r = np.asarray(self.rotation, dtype=float)
        if r.shape != (3, 3):
            raise ValueError("rotation must be 3x3")
        if not np.all(np.isfinite(p)) or not np.all(np.isfinite(r)):
            raise ValueError("pose entries must be finite")
        if np.max(np.abs(r.T @ r - np.eye(3))) > 1e-9:
            raise ValueError("rotation is not orthonormal within 1e-9")
        if abs(np.linalg.det(r) - 1.0) > 1e-9:
            raise ValueError("rotation determinant is not +1 within 1e-9")
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "rotation", r)

    def matrix(self) -> np.ndarray:
        t = np.eye(4)
        t[:3, :3] = self.rotation
        t[:3, 3] = self.position
        return t

    @staticmethod
    def from_matrix(t) -> "TipPose":
        t = np.asarray(t, dtype=float)
        return TipPose(t[:3, 3].copy(), t[:3, :3].copy())


def rodrigues(axis, angle_deg: float) -> np.ndarray:
    """Rotation matrix for a right-handed rotation of ``angle_deg`` about ``axis``.

    ``axis`` must be a unit vector (within 1e-9).
    """
    mu = np.asarray(axis, dtype=float).reshape(3)
    if abs(np.linalg.norm(mu) - 1.0) > 1e-9:
        raise ValueError(f"rotation axis must be unit length, |axis|={np.linalg.norm(mu)!r}")
    b = angle_deg * _RAD
    k = np.array([[0.0, -mu[2], mu[1]], [mu[2], 0.0, -mu[0]], [-mu[1], mu[0], 0.0]])
    return np.eye(3) + math.sin(b) * k + (1.0 - math.cos(b)) * (k @ k)


def geodesic_angle_deg(r_a, r_b) -> float:
    """Angle of the relative rotation between two rotation matrices, in degrees."""
    r = np.asarray(r_a).T @ np.asarray(r_b)
    c = (np.trace(r) - 1.0) / 2.0
    return math.acos(min(1.0, max(-1.0, c))) / _RAD


def config_to_bend(q: Config, p: CatheterParams) -> BendParams:
    """Map knob angles to the constant-curvature arc parameters."""
    p.check_workspace(q)
    alpha = p.knob_ratio * math.hypot(q.phi1, q.phi2)
    theta = math.atan2(q.phi2, q.phi1) / _RAD
    radius = p.bend_length_mm / (alpha * _RAD) if alpha > _STRAIGHT_ALPHA_DEG else math.inf
    return BendParams(theta_deg=theta, alpha_deg=alpha, radius_mm=radius)


def _bend_direction(q: Config) -> tuple:
    """Unit in-plane bending direction (cos theta, sin theta).

    Computed from the knob ratio directly so a zero knob component yields an
    exactly zero coordinate (atan2 + sin would leave ~1e-16 residue).
    """
    k = math.hypot(q.phi1, q.phi2)
    return q.phi1 / k, q.phi2 / k


def _tilt_pose(q: Config, p: CatheterParams) -> tuple:
    bend = config_to_bend(q, p)
    if not math.isfinite(bend.radius_mm):
        return np.array([0.0, 0.0, p.bend_length_mm]), np.eye(3)
    a = bend.alpha_deg * _RAD
    r = bend.radius_mm
    ux, uy = _bend_direction(q)
    rho = r * (1.0 - math.cos(a))
    position = np.array([rho * ux, rho * uy, r * math.sin(a)])
    rotation = rodrigues(np.array([-uy, ux, 0.0]), bend.alpha_deg)
    return position, rotation


def forward(q: Config, p: CatheterParams) -> TipPose:
    """Tip pose for a joint state (constant-curvature forward kinematics)."""
    tilt_p, tilt_r = _tilt_pose(q, p)
    roll = rodrigues(np.array([0.0, 0.0, 1.0]), q.phi3)
    position = roll @ tilt_p + np.array([0.0, 0.0, q.d4])
    rotation = roll @ tilt_r
    t = np.eye(4)
    t[:3, :3] = rotation
    t[:3, 3] = position
    return TipPose.from_matrix(t @ p.us_offset)


def inverse(pose: TipPose, p: CatheterParams, tol_mm: float = 1e-6, tol_rad: float = 1e-6) -> Config:
    """Joint state reproducing ``pose``, or UnreachablePoseError.

    Closed form: alpha from the tip z-axis, theta' from the tip position
    azimuth, phi3 as the signed angle (about the tip axis) between the
    tip x-axis and the base x-axis bent by alpha in the theta' plane.
    The result is verified through forward(); a pose off the arc manifold
    raises with the forward-check residuals.
    """
    t_no_us = pose.matrix() @ np.linalg.inv(p.us_offset)
    pos = t_no_us[:3, 3]
    rot = t_no_us[:3, :3]

    alpha_rad = math.acos(min(1.0, max(-1.0, rot[2, 2])))
    alpha_deg = alpha_rad / _RAD

    if alpha_deg <= 1e-7:
        phi3 = math.atan2(rot[1, 0], rot[0, 0]) / _RAD
        q = Config(0.0, 0.0, _wrap_deg(phi3), pos[2] - p.bend_length_mm)
    else:
        theta_prime = math.atan2(pos[1], pos[0])
        n_bend = np.array([-math.sin(theta_prime), math.cos(theta_prime), 0.0])
        bent_x = rodrigues(n_bend, alpha_deg) @ np.array([1.0, 0.0, 0.0])
        n_x = rot[:, 0]
        n_z = rot[:, 2]
        phi3 = math.atan2(np.cross(bent_x, n_x) @ n_z, bent_x @ n_x) / _RAD
        theta = theta_prime / _RAD - phi3
        knob = alpha_deg / p.knob_ratio
        phi1 = knob * math.cos(theta * _RAD)
        phi2 = knob * math.sin(theta * _RAD)
        radius = p.bend_length_mm / alpha_rad
        d4 = pos[2] - radius * math.sin(alpha_rad)
        q = Config(phi1, phi2, _wrap_deg(phi3), d4)

    p.check_workspace(q)
    check = forward(q, p)
    pos_residual = float(np.linalg.norm(check.position - pose.position))
    rot_residual = geodesic_angle_deg(check.rotation, pose.rotation) * _RAD
    if pos_residual > tol_mm or rot_residual > tol_rad:
        raise UnreachablePoseError(
            f"pose is not arc-consistent: position residual {pos_residual:.3e} mm, "
            f"rotation residual {rot_residual:.3e} rad",
            pos_residual,
            rot_residual,
        )
    return q


def _wrap_deg(angle: float) -> float:
    """Wrap an angle to (-180, 180]."""
    a = math.fmod(angle, 360.0)
    if a <= -180.0:
        a += 360.0
    elif a > 180.0:
        a -= 360.0
    return a


def arc_points(q: Config, p: CatheterParams, n: int = 33) -> np.ndarray:
    """Points along the bending section (base to tip), for rendering/inspection."""
    if n < 2:
        raise ValueError("need at least 2 arc samples")
    bend = config_to_bend(q, p)
    roll = rodrigues(np.array([0.0, 0.0, 1.0]), q.phi3)
    frac = np.linspace(0.0, 1.0, n)
    if not math.isfinite(bend.radius_mm):
        local = np.column_stack([np.zeros(n), np.zeros(n), frac * p.bend_length_mm])
    else:
        a = frac * bend.alpha_deg * _RAD
        ux, uy = _bend_direction(q)
        rho = bend.radius_mm * (1.0 - np.cos(a))
        local = np.column_stack([rho * ux, rho * uy, bend.radius_mm * np.sin(a)])
    return local @ roll.T + np.array([0.0, 0.0, q.d4])


def arc_tip_positions(phi1, phi2, p: CatheterParams) -> np.ndarray:
    """Vectorised tip positions of the bare bending section (phi3 = d4 = 0).

    Returns an (..., 3) array. Used for dense workspace evaluation where
    constructing TipPose objects per node would dominate runtime.
    """
    phi1 = np.asarray(phi1, dtype=float)
    phi2 = np.asarray(phi2, dtype=float)
    knob = np.hypot(phi1, phi2)
    alpha = p.knob_ratio * knob * _RAD
    out = np.empty(alpha.shape + (3,))
    straight = alpha <= _STRAIGHT_ALPHA_DEG * _RAD
    with np.errstate(divide="ignore", invalid="ignore"):
        r = p.bend_length_mm / alpha
        rho = r * (1.0 - np.cos(alpha))
        out[..., 0] = rho * phi1 / knob
        out[..., 1] = rho * phi2 / knob
        out[..., 2] = r * np.sin(alpha)
    out[straight] = (0.0, 0.0, p.bend_length_mm)
    return out
