"""Incremental roadmap over visited joint states, saved views, and recovery paths.

Every observed joint state becomes a vertex (after quantising to the motor
resolution); edges connect states closer than the density parameter epsilon
in a weighted Euclidean configuration metric (1 mm of translation counts as
1 deg of rotation by default). Recovery queries run A* over this graph, so a
returned path only ever replays states the user has actually visited.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field

import numpy as np

from icectl.kinematics import Config

DEFAULT_EPSILON = 1.0
# Motor resolution used for vertex identity (deg / mm).
VERTEX_QUANTUM = 0.01

_ROADMAP_MAGIC = "ICECTL-ROADMAP"
_ROADMAP_VERSION = 1

# Spatial-hash cells are 2*epsilon wide, so an epsilon-ball overlaps at most
# two cells per dimension (16 buckets in 4-D).
_CELL_FACTOR = 2.0


class NotOnRoadmapError(ValueError):
    """The requested start/save config has not been observed."""


class UnknownViewError(KeyError):
    """No saved view with the requested id."""


class UnreachableError(RuntimeError):
    """Start and goal lie in different connected components of the roadmap."""


def _quantize_key(q: Config) -> tuple:
    return (
        round(q.phi1 / VERTEX_QUANTUM),
        round(q.phi2 / VERTEX_QUANTUM),
        round(q.phi3 / VERTEX_QUANTUM),
        round(q.d4 / VERTEX_QUANTUM),
    )


def quantize(q: Config) -> Config:
    """Snap a config to the motor resolution used for vertex identity."""
    k = _quantize_key(q)
    return Config(*(v * VERTEX_QUANTUM for v in k))


class Roadmap:
    """Undirected graph of visited configs with epsilon-bounded edge weights."""

    def __init__(self, epsilon: float = DEFAULT_EPSILON, weights=(1.0, 1.0, 1.0, 1.0)):
        if epsilon <= 0:
            raise ValueError("epsilon must be > 0")
        self.epsilon = float(epsilon)
        self.weights = np.asarray(weights, dtype=float)
        if self.weights.shape != (4,) or np.any(self.weights <= 0):
            raise ValueError("weights must be 4 positive factors")
        self.vertices: list[Config] = []
        self._index: dict[tuple, int] = {}
        self._adjacency: list[list] = []
        self._edges: set = set()
        self._cells: dict[tuple, list] = {}
        self._scaled: list = []
        self._q_before: tuple = None

    # -- construction ------------------------------------------------------

    def distance(self, a: Config, b: Config) -> float:
        d = (a.as_array() - b.as_array()) * self.weights
        return float(np.sqrt(np.dot(d, d)))

    def vertex_id(self, q: Config):
        return self._index.get(_quantize_key(q))

    def contains(self, q: Config) -> bool:
        return self.vertex_id(q) is not None

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    def edges(self):
        for i, j in sorted(self._edges):
            w = next(w for n, w in self._adjacency[i] if n == j)
            yield i, j, w

    def observe(self, q_n: Config) -> "Roadmap":
        """Insert the current config and connect it to every vertex within epsilon.

        Consecutive duplicate observations are no-ops, so replaying a recorded
        stream builds the same roadmap regardless of the sampling rate. The
        neighbourhood scan runs only when a vertex is first inserted: every
        later vertex connects itself to all earlier ones within epsilon, so
        re-scanning on revisits cannot find new edges.
        """
        key = _quantize_key(q_n)
        if key == self._q_before:
            return self
        self._q_before = key
        if key in self._index:
            return self
        quantum = VERTEX_QUANTUM
        vq = Config(key[0] * quantum, key[1] * quantum, key[2] * quantum, key[3] * quantum)
        idx = len(self.vertices)
        self.vertices.append(vq)
        self._index[key] = idx
        self._adjacency.append([])
        w = self.weights
        sx = (key[0] * quantum * w[0], key[1] * quantum * w[1], key[2] * quantum * w[2], key[3] * quantum * w[3])
        self._scaled.append(sx)

        eps = self.epsilon
        cell_w = _CELL_FACTOR * eps
        eps_sq = eps * eps
        adj = self._adjacency
        cells = self._cells
        scaled = self._scaled
        # Candidate cells: per dimension, the home cell and the one on the
        # side the epsilon-ball spills into.
        spans = []
        for c in sx:
            lo = math.floor((c - eps) / cell_w)
            hi = math.floor((c + eps) / cell_w)
            spans.append((lo,) if lo == hi else (lo, hi))
        edges = self._edges
        my_adj = adj[idx]
        for c0 in spans[0]:
            for c1 in spans[1]:
                for c2 in spans[2]:
                    for c3 in spans[3]:
                        bucket = cells.get((c0, c1, c2, c3))
                        if not bucket:
                            continue
                        for j in bucket:
                            sy = scaled[j]
                            d_sq = (
                                (sx[0] - sy[0]) ** 2
                                + (sx[1] - sy[1]) ** 2
                                + (sx[2] - sy[2]) ** 2
                                + (sx[3] - sy[3]) ** 2
                            )
                            if d_sq > eps_sq:
                                continue
                            edges.add((j, idx))
                            dist = math.sqrt(d_sq)
                            my_adj.append((j, dist))
                            adj[j].append((idx, dist))
        home = (
            math.floor(sx[0] / cell_w),
            math.floor(sx[1] / cell_w),
            math.floor(sx[2] / cell_w),
            math.floor(sx[3] / cell_w),
        )
        cells.setdefault(home, []).append(idx)
        return self

    # -- persistence -------------------------------------------------------

    def save(self, path):
        lines = [
            f"{_ROADMAP_MAGIC} {_ROADMAP_VERSION}",
            f"epsilon {self.epsilon!r}",
            "weights " + " ".join(repr(float(w)) for w in self.weights),
            f"quantum {VERTEX_QUANTUM!r}",
            f"vertices {len(self.vertices)}",
            f"edges {len(self._edges)}",
        ]
        for v in self.vertices:
            lines.append(f"{v.phi1!r} {v.phi2!r} {v.phi3!r} {v.d4!r}")
        for i, j, w in self.edges():
            lines.append(f"{i} {j} {w!r}")
        with open(path, "w", encoding="utf-8") as f:
            f.write("\n".join(lines) + "\n")

    @staticmethod
    def load(path) -> "Roadmap":
        with open(path, "r", encoding="utf-8") as f:
            lines = f.read().splitlines()
        magic, version = lines[0].split()
        if magic != _ROADMAP_MAGIC:
            raise ValueError(f"not a roadmap file: magic {magic!r}")
        if int(version) != _ROADMAP_VERSION:
            raise ValueError(f"unsupported roadmap version {version}")
        epsilon = float(lines[1].split()[1])
        weights = [float(x) for x in lines[2].split()[1:]]
        n_vertices = int(lines[4].split()[1])
        n_edges = int(lines[5].split()[1])
        g = Roadmap(epsilon=epsilon, weights=weights)
        cell_w = _CELL_FACTOR * g.epsilon
        row = 6
        for _ in range(n_vertices):
            vals = [float(x) for x in lines[row].split()]
            row += 1
            q = Config(*vals)
            key = _quantize_key(q)
            idx = len(g.vertices)
            g.vertices.append(q)
            g._index[key] = idx
            g._adjacency.append([])
            scaled = tuple(q.as_array() * g.weights)
            g._scaled.append(scaled)
            home = tuple(math.floor(c / cell_w) for c in scaled)
            g._cells.setdefault(home, []).append(idx)
        for _ in range(n_edges):
            a, b, w = lines[row].split()
            row += 1
            i, j, w = int(a), int(b), float(w)
            g._edges.add((i, j) if i < j else (j, i))
            g._adjacency[i].append((j, w))
            g._adjacency[j].append((i, w))
        return g


@dataclass(frozen=True)
class View:
    view_id: str
    config: Config
    label: str


class ViewLibrary:
    """Ordered list of user-saved views (ids are unique, labels free text)."""

    def __init__(self):
        self.views: list[View] = []
        self._counter = 0

    def get(self, view_id: str) -> View:
        for v in self.views:
            if v.view_id == view_id:
                return v
        raise UnknownViewError(view_id)

    def __len__(self):
        return len(self.views)


def observe(q_n: Config, g: Roadmap) -> Roadmap:
    return g.observe(q_n)


def save_view(q_n: Config, label: str, v: ViewLibrary, g: Roadmap) -> ViewLibrary:
    """Append the current config to the view library; it must be a vertex."""
    if not g.contains(q_n):
        raise NotOnRoadmapError(
            "config has not been observed on the roadmap; observe it before saving"
        )
    v._counter += 1
    v.views.append(View(f"view-{v._counter}", quantize(q_n), str(label)))
    return v


@dataclass(frozen=True)
class Path:
    """Waypoints from start to goal along roadmap edges, with the summed cost."""

    waypoints: tuple
    total_cost: float


def query(q_start: Config, view_id: str, g: Roadmap, v: ViewLibrary) -> Path:
    """Minimum-cost roadmap path from the current config to a saved view.

    A* with the configuration-space distance to the goal as heuristic (the
    edge weights use the same metric, so it is admissible and consistent).
    Ties break on lower heuristic, then lexicographically smaller vertex, so
    paths are reproducible.
    """
    start = g.vertex_id(q_start)
    if start is None:
        raise NotOnRoadmapError("start config is not a roadmap vertex")
    goal_view = v.get(view_id)
    goal = g.vertex_id(goal_view.config)
    if goal is None:
        raise NotOnRoadmapError(f"view {view_id!r} config is no longer on the roadmap")

    goal_arr = g.vertices[goal].as_array() * g.weights
    scaled = g._scaled

    def heuristic(i):
        s = scaled[i]
        return math.sqrt(
            (s[0] - goal_arr[0]) ** 2
            + (s[1] - goal_arr[1]) ** 2
            + (s[2] - goal_arr[2]) ** 2
            + (s[3] - goal_arr[3]) ** 2
        )

    best = {start: 0.0}
    parent = {start: None}
    h0 = heuristic(start)
    open_heap = [(h0, h0, _quantize_key(g.vertices[start]), start)]
    closed = set()
    while open_heap:
        f, h, _, i = heapq.heappop(open_heap)
        if i in closed:
            continue
        if i == goal:
            waypoints = []
            k = goal
            while k is not None:
                waypoints.append(g.vertices[k])
                k = parent[k]
            waypoints.reverse()
            return Path(tuple(waypoints), best[goal])
        closed.add(i)
        gi = best[i]
        for j, w in g._adjacency[i]:
            if j in closed:
                continue
            cand = gi + w
            if cand < best.get(j, math.inf) - 1e-15:
                best[j] = cand
                parent[j] = i
                hj = heuristic(j)
                heapq.heappush(open_heap, (cand + hj, hj, _quantize_key(g.vertices[j]), j))
    raise UnreachableError(
        f"no roadmap path from the current config to view {view_id!r} "
        "(disconnected traces)"
    )


@dataclass(frozen=True)
class ExecutionReport:
    emitted: int
    final_config: Config
    aborted: bool


def execute(path: Path, emit, rate_hz: float = None) -> ExecutionReport:
    """Stream waypoints in order to a consumer (plant or gateway).

    The consumer may reject a waypoint by returning False, which aborts the
    run; the report then covers the waypoints actually emitted.
    """
    emitted = 0
    final = None
    for q in path.waypoints:
        if rate_hz:
            time.sleep(1.0 / rate_hz)
        ok = emit(q)
        if ok is False:
            return ExecutionReport(emitted, final if final is not None else q, True)
        emitted += 1
        final = q
    return ExecutionReport(emitted, final, False)
