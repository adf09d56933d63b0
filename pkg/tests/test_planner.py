import heapq
import math

import numpy as np
import pytest

from icectl.kinematics import Config
from icectl.planner import (
    ExecutionReport,
    NotOnRoadmapError,
    Path,
    Roadmap,
    UnknownViewError,
    UnreachableError,
    ViewLibrary,
    execute,
    observe,
    query,
    quantize,
    save_view,
)


def dijkstra_cost(g: Roadmap, s: int, t: int):
    best = {s: 0.0}
    h = [(0.0, s)]
    done = set()
    while h:
        d, i = heapq.heappop(h)
        if i in done:
            continue
        if i == t:
            return d
        done.add(i)
        for j, w in g._adjacency[i]:
            nd = d + w
            if nd < best.get(j, math.inf):
                best[j] = nd
                heapq.heappush(h, (nd, j))
    return None


def walk(rng, n, step=0.4):
    x = np.zeros(4)
    out = []
    for _ in range(n):
        x = x + rng.uniform(-step, step, 4)
        x[:2] = np.clip(x[:2], -90, 90)
        out.append(Config(*x))
    return out


class TestObserve:
    def test_first_observation(self):
        g = Roadmap()
        observe(Config(0, 0, 0, 0), g)
        assert len(g.vertices) == 1
        assert g.edge_count == 0

    def test_edge_weight_is_config_distance(self):
        g = Roadmap()
        observe(Config(0, 0, 0, 0), g)
        observe(Config(0.5, 0, 0, 0), g)
        assert len(g.vertices) == 2
        edges = list(g.edges())
        assert edges == [(0, 1, 0.5)]

    def test_consecutive_duplicate_is_noop(self):
        g = Roadmap()
        observe(Config(0, 0, 0, 0), g)
        observe(Config(0.5, 0, 0, 0), g)
        before = (len(g.vertices), g.edge_count)
        observe(Config(0.5, 0, 0, 0), g)
        assert (len(g.vertices), g.edge_count) == before

    def test_far_vertices_not_connected(self):
        g = Roadmap()
        observe(Config(0, 0, 0, 0), g)
        observe(Config(5, 0, 0, 0), g)
        assert g.edge_count == 0

    def test_vertices_quantized(self):
        g = Roadmap()
        observe(Config(0.123456, 0, 0, 0), g)
        assert g.vertices[0].phi1 == pytest.approx(0.12, abs=1e-12)

    def test_mm_equals_degree_metric(self):
        g = Roadmap()
        observe(Config(0, 0, 0, 0), g)
        observe(Config(0, 0, 0, 0.5), g)  # pure translation, 0.5 mm
        assert list(g.edges())[0][2] == 0.5

    def test_chunking_invariance(self):
        rng = np.random.default_rng(5)
        trace = walk(rng, 300)
        dup = []
        for q in trace:
            dup.extend([q, q])  # duplicate samples simulate a faster tick
        g1 = Roadmap()
        for q in trace:
            observe(q, g1)
        g2 = Roadmap()
        for q in dup:
            observe(q, g2)
        assert [v.as_array().tolist() for v in g1.vertices] == [
            v.as_array().tolist() for v in g2.vertices
        ]
        assert set(g1._edges) == set(g2._edges)


class TestViews:
    def test_save_appends(self):
        g = Roadmap()
        v = ViewLibrary()
        observe(Config(1, 2, 3, 4), g)
        save_view(Config(1, 2, 3, 4), "septal", v, g)
        assert len(v) == 1
        assert v.views[0].label == "septal"

    def test_same_config_twice_distinct_ids(self):
        g = Roadmap()
        v = ViewLibrary()
        observe(Config(1, 2, 3, 4), g)
        save_view(Config(1, 2, 3, 4), "a", v, g)
        save_view(Config(1, 2, 3, 4), "b", v, g)
        assert len(v) == 2
        assert v.views[0].view_id != v.views[1].view_id

    def test_unobserved_config_rejected(self):
        g = Roadmap()
        v = ViewLibrary()
        observe(Config(0, 0, 0, 0), g)
        with pytest.raises(NotOnRoadmapError):
            save_view(Config(50, 0, 0, 0), "nope", v, g)


class TestQuery:
    def build_chain(self):
        g = Roadmap()
        v = ViewLibrary()
        for q in (Config(0, 0, 0, 0), Config(1, 0, 0, 0), Config(2, 0, 0, 0)):
            observe(q, g)
        save_view(Config(2, 0, 0, 0), "end", v, g)
        return g, v

    def test_start_equals_goal(self):
        g, v = self.build_chain()
        save_view(Config(0, 0, 0, 0), "self", v, g)
        p = query(Config(0, 0, 0, 0), "view-2", g, v)
        assert len(p.waypoints) == 1
        assert p.total_cost == 0.0

    def test_chain_path_matches_dijkstra(self):
        g, v = self.build_chain()
        p = query(Config(0, 0, 0, 0), "view-1", g, v)
        assert [q.phi1 for q in p.waypoints] == [0.0, 1.0, 2.0]
        assert p.total_cost == pytest.approx(2.0)
        assert p.total_cost == pytest.approx(dijkstra_cost(g, 0, 2))

    def test_disjoint_traces_unreachable(self):
        g = Roadmap()
        v = ViewLibrary()
        observe(Config(0, 0, 0, 0), g)
        observe(Config(50, 0, 0, 0), g)
        save_view(Config(50, 0, 0, 0), "far", v, g)
        with pytest.raises(UnreachableError):
            query(Config(0, 0, 0, 0), "view-1", g, v)

    def test_unknown_view(self):
        g, v = self.build_chain()
        with pytest.raises(UnknownViewError):
            query(Config(0, 0, 0, 0), "view-99", g, v)

    def test_unobserved_start(self):
        g, v = self.build_chain()
        with pytest.raises(NotOnRoadmapError):
            query(Config(80, 80, 0, 0), "view-1", g, v)

    def test_optimality_against_dijkstra_random_traces(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            g = Roadmap()
            v = ViewLibrary()
            trace = walk(rng, 400)
            for q in trace:
                observe(q, g)
            goal = trace[int(rng.integers(len(trace)))]
            observe(goal, g)
            save_view(goal, "goal", v, g)
            start = quantize(trace[0])
            p = query(start, "view-1", g, v)
            oracle = dijkstra_cost(g, g.vertex_id(start), g.vertex_id(goal))
            assert p.total_cost == pytest.approx(oracle, abs=1e-9)
            for a, b in zip(p.waypoints, p.waypoints[1:]):
                assert g.distance(a, b) <= g.epsilon + 1e-12

    def test_deterministic_waypoints(self):
        rng = np.random.default_rng(23)
        trace = walk(rng, 300)
        paths = []
        for _ in range(2):
            g = Roadmap()
            v = ViewLibrary()
            for q in trace:
                observe(q, g)
            observe(trace[-1], g)
            save_view(trace[-1], "g", v, g)
            p = query(quantize(trace[0]), "view-1", g, v)
            paths.append([tuple(q.as_array()) for q in p.waypoints])
        assert paths[0] == paths[1]

    def test_safety_by_trace(self):
        rng = np.random.default_rng(31)
        g = Roadmap()
        v = ViewLibrary()
        trace = walk(rng, 500)
        for q in trace:
            observe(q, g)
        observed = {tuple(x.as_array()) for x in g.vertices}
        save_view(trace[-1], "g", v, g)
        p = query(quantize(trace[0]), "view-1", g, v)
        for q in p.waypoints:
            assert tuple(q.as_array()) in observed


class TestExecute:
    def test_single_waypoint(self):
        p = Path((Config(1, 2, 3, 4),), 0.0)
        seen = []
        rep = execute(p, lambda q: seen.append(q) or True)
        assert rep.emitted == 1 and not rep.aborted
        assert rep.final_config == Config(1, 2, 3, 4)
        assert seen == [Config(1, 2, 3, 4)]

    def test_three_waypoints_in_order(self):
        wp = tuple(Config(float(i), 0, 0, 0) for i in range(3))
        seen = []
        rep = execute(Path(wp, 2.0), lambda q: seen.append(q) or True)
        assert rep.emitted == 3 and seen == list(wp)

    def test_consumer_rejection_aborts(self):
        wp = tuple(Config(float(i), 0, 0, 0) for i in range(3))
        rep = execute(Path(wp, 2.0), lambda q: q.phi1 < 2.0)
        assert rep.aborted
        assert rep.emitted == 2
        assert rep.final_config == Config(1.0, 0, 0, 0)
        assert isinstance(rep, ExecutionReport)


class TestPersistence:
    def test_roadmap_roundtrip_bitwise(self, tmp_path):
        rng = np.random.default_rng(7)
        g = Roadmap()
        for q in walk(rng, 200):
            observe(q, g)
        p1, p2 = tmp_path / "a.txt", tmp_path / "b.txt"
        g.save(p1)
        g2 = Roadmap.load(p1)
        g2.save(p2)
        assert p1.read_bytes() == p2.read_bytes()
        assert len(g2.vertices) == len(g.vertices)
        assert g2.edge_count == g.edge_count

    def test_loaded_roadmap_queries_identically(self, tmp_path):
        rng = np.random.default_rng(9)
        trace = walk(rng, 300)
        g = Roadmap()
        for q in trace:
            observe(q, g)
        v = ViewLibrary()
        save_view(trace[-1], "g", v, g)
        p = tmp_path / "r.txt"
        g.save(p)
        g2 = Roadmap.load(p)
        a = query(quantize(trace[0]), "view-1", g, v)
        b = query(quantize(trace[0]), "view-1", g2, v)
        assert a.total_cost == b.total_cost
