"""Data-driven correction of the catheter's non-linear elasticity.

The correction field F maps desired knob angles to the knob angles that make
the real (distorted) catheter tip land where the ideal model predicts. It is
learned by registering measured tip positions to model tip positions:

 1. sample the plant at commanded knob pairs (dense raster or five visually
    verifiable poses),
 2. interpolate the measured x/y/z over the whole workspace,
 3. evaluate the ideal model over the same workspace grid,
 4. for every grid node, pick the commanded pair whose interpolated real
    position is nearest to the model position at that node.

The nearest-position search is a deliberate brute force over the grid
(O(N^2) in the node count) - at desk scale (181x181 nodes) a blocked
matmul does this in seconds and needs no spatial index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RBFInterpolator, RectBivariateSpline
from scipy.optimize import least_squares

from icectl.kinematics import CatheterParams, Config, arc_tip_positions
from icectl.plant import PlantModel, plant_forward

_MAP_MAGIC = "ICECTL-MAP"
_MAP_VERSION = 1

# How close (mm, in the x/y tip plane) the five-point search must get to a
# visual target before the pose counts as reached.
FIVE_POINT_TOL_MM = 0.5


class CalibrationError(RuntimeError):
    """A calibration target could not be reached under the plant's distortion."""

    def __init__(self, message, unreached=()):
        super().__init__(message)
        self.unreached = list(unreached)


@dataclass(frozen=True)
class CalibrationSample:
    """One commanded knob pair and the measured tip position (mm)."""

    commanded: tuple
    measured_tip: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "commanded", (float(self.commanded[0]), float(self.commanded[1])))
        object.__setattr__(self, "measured_tip", np.asarray(self.measured_tip, dtype=float).reshape(3))


@dataclass(frozen=True)
class CalibrationSet:
    """Samples plus their provenance: full raster grid or five-point."""

    samples: tuple
    source: str

    def __post_init__(self):
        if self.source not in ("dense_grid", "five_point"):
            raise ValueError(f"unknown calibration source {self.source!r}")
        object.__setattr__(self, "samples", tuple(self.samples))
        pairs = [s.commanded for s in self.samples]
        if len(set(pairs)) != len(pairs):
            raise ValueError("duplicate commanded pairs in calibration set")
        if self.source == "five_point" and len(pairs) != 5:
            raise ValueError("five_point calibration must have exactly 5 samples")
        if self.source == "dense_grid":
            # 3 per axis is the coarsest raster the workspace admits (corner/
            # edge/centre at 90 deg spacing); the spline order degrades to
            # quadratic there.
            n1 = len({p[0] for p in pairs})
            n2 = len({p[1] for p in pairs})
            if n1 < 3 or n2 < 3:
                raise ValueError("dense_grid calibration needs at least a 3x3 raster")


def collect_grid(m: PlantModel, spacing_deg: float) -> CalibrationSet:
    """Raster the knob workspace and record noiseless plant tip positions."""
    if spacing_deg <= 0:
        raise ValueError("grid spacing must be > 0")
    w = m.params.workspace_deg
    steps = 2.0 * w / spacing_deg
    if abs(steps - round(steps)) > 1e-9:
        raise ValueError(f"spacing {spacing_deg:g} deg does not divide the +/-{w:g} deg workspace")
    axis = np.linspace(-w, w, int(round(steps)) + 1)
    samples = []
    for p1 in axis:
        for p2 in axis:
            pose = plant_forward(Config(p1, p2, 0.0, 0.0), m)
            samples.append(CalibrationSample((p1, p2), pose.position))
    return CalibrationSet(tuple(samples), "dense_grid")


def _five_point_targets(params: CatheterParams):
    # Straight pose plus the four 90-deg bends; targets are the in-plane tip
    # coordinates (x, y) of the ideal model (z is pinned by the arc length).
    rho = params.bend_length_mm / (math.pi / 2.0) * (1.0 - math.cos(math.pi / 2.0))
    return [
        ("straight", (0.0, 0.0), (0.0, 0.0)),
        ("ap+90", (rho, 0.0), (90.0, 0.0)),
        ("ap-90", (-rho, 0.0), (-90.0, 0.0)),
        ("rl+90", (0.0, rho), (0.0, 90.0)),
        ("rl-90", (0.0, -rho), (0.0, -90.0)),
    ]


def collect_five_point(m: PlantModel, tol_mm: float = FIVE_POINT_TOL_MM) -> CalibrationSet:
    """Find the five visually verifiable calibration poses by searching the plant.

    Mimics the joystick procedure: for each target (x, y) tip coordinate the
    commanded knob pair is found by a bounded 2-D root find on the plant.
    Raises CalibrationError naming every target that cannot be reached inside
    the workspace.
    """
    w = m.params.workspace_deg
    samples = []
    unreached = []
    for name, target, guess in _five_point_targets(m.params):
        def residual(x):
            pose = plant_forward(Config(x[0], x[1], 0.0, 0.0), m)
            return [pose.position[0] - target[0], pose.position[1] - target[1]]

        best = None
        for scale in (1.0, 0.9, 0.8, 1.1, 0.6):
            x0 = np.clip(np.array(guess) * scale, -w, w)
            sol = least_squares(residual, x0, bounds=(-w, w), xtol=1e-12, ftol=1e-12, gtol=1e-12)
            miss = math.hypot(*sol.fun)
            if best is None or miss < best[0]:
                best = (miss, sol.x)
            if miss <= tol_mm * 1e-3:
                break
        miss, x = best
        if miss > tol_mm:
            unreached.append((name, target, miss))
            continue
        pose = plant_forward(Config(x[0], x[1], 0.0, 0.0), m)
        samples.append(CalibrationSample((x[0], x[1]), pose.position))
    if unreached:
        detail = ", ".join(f"{n} at (x,y)=({t[0]:.1f},{t[1]:.1f}) missed by {d:.2f} mm" for n, t, d in unreached)
        raise CalibrationError(f"five-point targets unreachable: {detail}", unreached)
    return CalibrationSet(tuple(samples), "five_point")


@dataclass
class ElasticityMap:
    """Learned correction field on a uniform knob-angle grid.

    ``corrected1``/``corrected2`` hold the corrected knob pair per grid node,
    indexed ``[i, j]`` over ``axis_deg[i]`` (phi1) and ``axis_deg[j]`` (phi2).
    ``apply`` interpolates the table bilinearly.
    """

    workspace_deg: float
    resolution_deg: float
    source: str
    axis_deg: np.ndarray
    corrected1: np.ndarray
    corrected2: np.ndarray
    interpolants: tuple = field(default=None, repr=False, compare=False)

    def node_count(self) -> int:
        return self.axis_deg.size ** 2

    def apply(self, phi1: float, phi2: float) -> tuple:
        """Corrected knob pair for a desired pair, bilinear in the grid table."""
        w = self.workspace_deg
        if abs(phi1) > w + 1e-9 or abs(phi2) > w + 1e-9:
            raise ValueError(f"query ({phi1:.3f}, {phi2:.3f}) outside +/-{w:g} deg workspace")
        res = self.resolution_deg
        n = self.axis_deg.size
        fi = (phi1 + w) / res
        fj = (phi2 + w) / res
        i = min(int(fi), n - 2)
        j = min(int(fj), n - 2)
        di = fi - i
        dj = fj - j
        out = []
        for table in (self.corrected1, self.corrected2):
            v = (
                table[i, j] * (1 - di) * (1 - dj)
                + table[i + 1, j] * di * (1 - dj)
                + table[i, j + 1] * (1 - di) * dj
                + table[i + 1, j + 1] * di * dj
            )
            out.append(float(v))
        return out[0], out[1]

    def max_identity_deviation_deg(self) -> float:
        g1, g2 = np.meshgrid(self.axis_deg, self.axis_deg, indexing="ij")
        return float(
            np.max(np.hypot(self.corrected1 - g1, self.corrected2 - g2))
        )

    def duplicate_node_count(self) -> int:
        """Grid nodes whose corrected pair coincides exactly with another node's.

        Nearest-position registration cannot guarantee injectivity where the
        distortion compresses or saturates the workspace; this is the
        diagnostic for it.
        """
        pairs = np.column_stack([self.corrected1.ravel(), self.corrected2.ravel()])
        uniq = np.unique(pairs, axis=0)
        return pairs.shape[0] - uniq.shape[0]

    def validate(self):
        w = self.workspace_deg
        if np.max(np.abs(self.corrected1)) > w + 1e-9 or np.max(np.abs(self.corrected2)) > w + 1e-9:
            raise ValueError("corrected pairs leave the workspace")
        c = self.axis_deg.size // 2
        if self.corrected1[c, c] != 0.0 or self.corrected2[c, c] != 0.0:
            raise ValueError("straight pose is not a fixed point of the map")

    def save(self, path):
        lines = [
            f"{_MAP_MAGIC} {_MAP_VERSION}",
            f"workspace_deg {self.workspace_deg!r}",
            f"resolution_deg {self.resolution_deg!r}",
            f"source {self.source}",
            f"nodes {self.axis_deg.size}",
        ]
        for i in range(self.axis_deg.size):
            for j in range(self.axis_deg.size):
                lines.append(f"{float(self.corrected1[i, j])!r} {float(self.corrected2[i, j])!r}")
        with open(path, "w", encoding="utf-8") as f:
            f.write("\n".join(lines) + "\n")

    @staticmethod
    def load(path) -> "ElasticityMap":
        with open(path, "r", encoding="utf-8") as f:
            lines = f.read().splitlines()
        magic, version = lines[0].split()
        if magic != _MAP_MAGIC:
            raise ValueError(f"not an elasticity map file: magic {magic!r}")
        if int(version) != _MAP_VERSION:
            raise ValueError(f"unsupported map version {version}")
        meta = {}
        for k in range(1, 5):
            key, value = lines[k].split(None, 1)
            meta[key] = value
        n = int(meta["nodes"])
        w = float(meta["workspace_deg"])
        res = float(meta["resolution_deg"])
        c1 = np.empty((n, n))
        c2 = np.empty((n, n))
        row = 5
        for i in range(n):
            for j in range(n):
                a, b = lines[row].split()
                c1[i, j] = float(a)
                c2[i, j] = float(b)
                row += 1
        axis = np.linspace(-w, w, n)
        return ElasticityMap(w, res, meta["source"], axis, c1, c2)


def _fit_interpolants(cal: CalibrationSet):
    pts = np.array([s.commanded for s in cal.samples])
    vals = np.array([s.measured_tip for s in cal.samples])
    if cal.source == "dense_grid":
        a1 = np.unique(pts[:, 0])
        a2 = np.unique(pts[:, 1])
        lut = {s.commanded: s.measured_tip for s in cal.samples}
        grids = np.empty((a1.size, a2.size, 3))
        for i, p1 in enumerate(a1):
            for j, p2 in enumerate(a2):
                key = (float(p1), float(p2))
                if key not in lut:
                    raise ValueError("dense_grid calibration is not a complete raster")
                grids[i, j] = lut[key]
        k = min(3, a1.size - 1, a2.size - 1)
        splines = [RectBivariateSpline(a1, a2, grids[:, :, i], kx=k, ky=k) for i in range(3)]
        return lambda q1, q2: np.stack([s.ev(q1, q2) for s in splines], axis=-1)
    rbf = RBFInterpolator(pts, vals, kernel="thin_plate_spline")
    return lambda q1, q2: rbf(np.column_stack([np.ravel(q1), np.ravel(q2)])).reshape(np.shape(q1) + (3,))


def _nearest_candidate(queries: np.ndarray, candidates: np.ndarray, block: int = 8192) -> np.ndarray:
    """Index of the nearest candidate per query (squared-Euclidean, blocked).

    Candidates are ordered lexicographically by knob pair, and np.argmin takes
    the first minimum, so exact distance ties resolve to the lexicographically
    smallest corrected pair. Distances are ranked in float32: grid positions
    sit >= 0.2 mm apart where the ranking matters, two orders of magnitude
    above the float32 rounding of the squared distances.
    """
    q32 = np.ascontiguousarray(queries, dtype=np.float32)
    c32t = np.ascontiguousarray(candidates, dtype=np.float32).T.copy()
    c_sq = np.einsum("ij,ji->i", c32t.T, c32t)
    out = np.empty(queries.shape[0], dtype=np.int64)
    for lo in range(0, queries.shape[0], block):
        hi = min(lo + block, queries.shape[0])
        d = q32[lo:hi] @ c32t
        d *= -2.0
        d += c_sq[None, :]
        out[lo:hi] = np.argmin(d, axis=1)
    return out


def build_map(cal: CalibrationSet, params: CatheterParams, resolution_deg: float = 1.0) -> ElasticityMap:
    """Learn the correction field from a calibration set (see module docstring)."""
    if resolution_deg <= 0:
        raise ValueError("resolution must be > 0")
    w = params.workspace_deg
    steps = 2.0 * w / resolution_deg
    if abs(steps - round(steps)) > 1e-9:
        raise ValueError(f"resolution {resolution_deg:g} deg does not divide the workspace")
    if len(cal.samples) < 3:
        raise ValueError("need at least 3 calibration samples")
    pts = np.array([s.commanded for s in cal.samples])
    if np.linalg.matrix_rank(pts - pts.mean(axis=0)) < 2:
        raise ValueError("calibration samples are collinear; cannot fit 2-D interpolants")

    interp = _fit_interpolants(cal)
    axis = np.linspace(-w, w, int(round(steps)) + 1)
    g1, g2 = np.meshgrid(axis, axis, indexing="ij")

    real = interp(g1, g2).reshape(-1, 3)
    model = arc_tip_positions(g1, g2, params).reshape(-1, 3)

    idx = _nearest_candidate(model, real)
    corrected1 = g1.ravel()[idx].reshape(g1.shape)
    corrected2 = g2.ravel()[idx].reshape(g2.shape)

    emap = ElasticityMap(
        workspace_deg=w,
        resolution_deg=float(resolution_deg),
        source=cal.source,
        axis_deg=axis,
        corrected1=corrected1,
        corrected2=corrected2,
        interpolants=(interp,),
    )
    emap.validate()
    return emap


def _sg_kernel(window: int, order: int) -> np.ndarray:
    half = window // 2
    x = np.arange(-half, half + 1, dtype=float)
    a = np.vander(x, order + 1, increasing=True)
    return (np.linalg.pinv(a.T @ a) @ a.T)[0]


def smooth(traj, window: int = 11, order: int = 2):
    """Savitzky-Golay filter each joint channel of a config sequence.

    Interior points use the standard least-squares kernel; endpoints are
    re-fit on the truncated one-sided windows so the output keeps the input
    length. Polynomials of degree <= order pass through unchanged.
    """
    if window % 2 != 1:
        raise ValueError("window must be odd")
    if order >= window:
        raise ValueError("order must be < window")
    if order < 0:
        raise ValueError("order must be >= 0")
    traj = list(traj)
    n = len(traj)
    if n < window:
        raise ValueError(f"trajectory length {n} shorter than window {window}")
    values = np.array([c.as_array() for c in traj])
    half = window // 2
    kernel = _sg_kernel(window, order)
    out = np.empty_like(values)
    for ch in range(values.shape[1]):
        col = values[:, ch]
        out[half : n - half, ch] = np.convolve(col, kernel[::-1], mode="valid")
        for i in list(range(half)) + list(range(n - half, n)):
            lo = max(0, i - half)
            hi = min(n - 1, i + half)
            xs = np.arange(lo, hi + 1, dtype=float) - i
            deg = min(order, xs.size - 1)
            coeffs = np.polynomial.polynomial.polyfit(xs, col[lo : hi + 1], deg)
            out[i, ch] = coeffs[0]
    return [Config.from_array(row) for row in out]
