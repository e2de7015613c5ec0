import itertools

import networkx as nx
import numpy as np
import pytest
from scipy.optimize import linprog

from _build import bidirected_cycle, digraph, directed_cycle, random_instances, triangle
from genus_atsp.exceptions import LpInfeasible, LpUnbounded, SolverStall
from genus_atsp.flows import FlowNetwork
from genus_atsp.harness import audit_cuts, brute_force_atsp
from genus_atsp.heldkarp_lp import (
    normalize_metric,
    out_cut_value,
    separate_subtour,
    solve_held_karp,
    symmetrize,
    violated_cuts,
)
from genus_atsp.simplex import simplex_solve


def full_lp_objective(g):
    """HiGHS on the LP with every subtour cut written out."""
    arcs = list(g.arc_ids)
    verts = list(g.vertices)
    c = [g.arcs[a].cost for a in arcs]
    a_eq = np.zeros((len(verts), len(arcs)))
    for k, a in enumerate(arcs):
        a_eq[verts.index(g.arcs[a].tail), k] += 1
        a_eq[verts.index(g.arcs[a].head), k] -= 1
    rows = []
    for r in range(1, len(verts)):
        for side in itertools.combinations(verts, r):
            side = set(side)
            rows.append([-1.0 if g.arcs[a].tail in side and g.arcs[a].head not in side else 0.0 for a in arcs])
    res = linprog(c, A_ub=rows, b_ub=[-1.0] * len(rows), A_eq=a_eq, b_eq=np.zeros(len(verts)), method="highs")
    assert res.status == 0
    return res.fun


def two_triangles():
    # vertex 0 shared by the directed cycles 0-1-2 and 0-3-4
    return digraph(5, [(0, 1, 1, None), (1, 2, 1, None), (2, 0, 1, None), (0, 3, 1, None), (3, 4, 1, None), (4, 0, 1, None)])


# --- normalization ----------------------------------------------------------


def test_normalize_uses_shorter_path():
    g = digraph(3, [(0, 1, 10, 1), (0, 2, 1, 1), (2, 1, 2, 1)])
    h = normalize_metric(g)
    assert h.arcs[0].cost == 3
    assert all(h.arcs[a].cost <= g.arcs[a].cost for a in g.arc_ids)


def test_normalize_fixpoint_on_metric_instance():
    g = triangle()
    assert {a: x.cost for a, x in normalize_metric(g).arcs.items()} == {a: x.cost for a, x in g.arcs.items()}


def test_normalize_is_idempotent_and_matches_networkx():
    for g in random_instances(20):
        h = normalize_metric(g)
        again = normalize_metric(h)
        assert all(h.arcs[a].cost == again.arcs[a].cost for a in g.arc_ids)
        d = nx.DiGraph()
        for arc in g.arcs.values():
            if not d.has_edge(arc.tail, arc.head) or d[arc.tail][arc.head]["weight"] > arc.cost:
                d.add_edge(arc.tail, arc.head, weight=arc.cost)
        dist = dict(nx.all_pairs_dijkstra_path_length(d))
        for a, arc in h.arcs.items():
            assert arc.cost == pytest.approx(dist[arc.tail][arc.head])


# --- solve ------------------------------------------------------------------


def test_directed_cycle():
    sol = solve_held_karp(directed_cycle(3))
    assert sol.objective == pytest.approx(3)
    assert all(v == pytest.approx(1) for v in sol.x.values())


def test_bidirected_triangle():
    sol = solve_held_karp(triangle())
    assert sol.objective == pytest.approx(3)
    assert full_lp_objective(triangle()) == pytest.approx(3)


def test_two_cycles_sharing_a_vertex():
    g = two_triangles()
    assert solve_held_karp(g).objective == pytest.approx(6)
    assert brute_force_atsp(g).opt == 6


def test_bidirected_cycle_lp_equals_n():
    for n in (3, 5, 8):
        assert solve_held_karp(bidirected_cycle(n)).objective == pytest.approx(n)


def test_cut_loop_matches_fully_enumerated_lp():
    for g in random_instances(25, n_hi=8, seed=4):
        g = normalize_metric(g)
        for backend in ("simplex", "highs"):
            sol = solve_held_karp(g, backend=backend)
            assert sol.objective == pytest.approx(full_lp_objective(g), rel=1e-7, abs=1e-7)


def test_solution_is_feasible_and_below_opt():
    for g in random_instances(30, n_hi=9, seed=2):
        g = normalize_metric(g)
        sol = solve_held_karp(g)
        x = sol.x
        assert min(x.values()) >= 0
        for v in g.vertices:
            out_v = sum(x[a] for a in g.arc_ids if g.arcs[a].tail == v)
            in_v = sum(x[a] for a in g.arc_ids if g.arcs[a].head == v)
            assert abs(out_v - in_v) <= 1e-6
        assert not violated_cuts(g, x)
        assert sol.objective <= brute_force_atsp(g).opt + 1e-6
        z = symmetrize(g, x)
        assert audit_cuts(g.embedding, [], z).min_cut >= 2 - 1e-6


def test_round_limit():
    g = random_instances(1, n_lo=9, n_hi=9, seed=5)[0]
    with pytest.raises(SolverStall):
        solve_held_karp(normalize_metric(g), max_rounds=1)


def test_dump_lines():
    lines = solve_held_karp(directed_cycle(3)).dump_lines()
    assert lines == ["x 0 1", "x 1 1", "x 2 1"]


# --- separation ---------------------------------------------------------------


def test_feasible_point_has_no_violated_cut():
    g = directed_cycle(4)
    assert separate_subtour(g, {a: 1.0 for a in g.arc_ids}) is None


def test_zero_point_violates_a_singleton():
    g = triangle()
    u = separate_subtour(g, {a: 0.0 for a in g.arc_ids})
    assert u is not None
    assert out_cut_value(g, {}, u) == 0


def test_disjoint_cycles_are_separated():
    # two directed triangles joined by a bidirected bridge carrying no flow
    g = digraph(
        6,
        [(0, 1, 1, None), (1, 2, 1, None), (2, 0, 1, None), (3, 4, 1, None), (4, 5, 1, None), (5, 3, 1, None), (0, 3, 1, 1)],
    )
    x = {a: 1.0 for a in g.arc_ids}
    for a in g.edge_arcs[6]:
        x[a] = 0.0
    u = separate_subtour(g, x)
    assert u in (frozenset({0, 1, 2}), frozenset({3, 4, 5}))
    assert out_cut_value(g, x, u) == 0


def test_symmetrize():
    g = digraph(2, [(0, 1, 1, 1)])
    assert symmetrize(g, {0: 0.3, 1: 0.7})[0] == pytest.approx(1.0)
    g = directed_cycle(3)
    assert symmetrize(g, {0: 1.0, 1: 1.0, 2: 1.0}) == {0: 1.0, 1: 1.0, 2: 1.0}


# --- max-flow and simplex against library oracles ------------------------------


def test_dinic_matches_networkx():
    rng = np.random.default_rng(0)
    for trial in range(40):
        n = int(rng.integers(2, 10))
        net = FlowNetwork(n)
        h = nx.DiGraph()
        h.add_nodes_from(range(n))
        for _ in range(int(rng.integers(1, 3 * n))):
            u, v = (int(x) for x in rng.integers(0, n, 2))
            if u == v:
                continue
            cap = int(rng.integers(0, 10)) if trial % 2 else float(rng.random())
            net.add_edge(u, v, cap)
            if h.has_edge(u, v):
                h[u][v]["capacity"] += cap
            else:
                h.add_edge(u, v, capacity=cap)
        value = net.max_flow(0, n - 1)
        assert value == pytest.approx(nx.maximum_flow_value(h, 0, n - 1))


def test_simplex_matches_highs_on_random_lps():
    rng = np.random.default_rng(1)
    for _ in range(40):
        m, n = int(rng.integers(1, 5)), int(rng.integers(2, 7))
        c = rng.integers(0, 10, n).astype(float)
        a_ge = rng.integers(0, 3, (m, n)).astype(float)
        a_ge[:, 0] = 1.0  # keeps every row satisfiable
        b_ge = rng.integers(0, 4, m).astype(float)
        x, obj = simplex_solve(c, None, None, a_ge, b_ge)
        res = linprog(c, A_ub=-a_ge, b_ub=-b_ge, method="highs")
        assert obj == pytest.approx(res.fun, abs=1e-8)
        assert np.all(a_ge @ x >= b_ge - 1e-9)


def test_simplex_detects_infeasible_and_unbounded():
    with pytest.raises(LpInfeasible):
        simplex_solve(np.array([1.0]), np.array([[1.0]]), np.array([-1.0]), None, None)
    with pytest.raises(LpUnbounded):
        simplex_solve(np.array([-1.0]), None, None, np.array([[1.0]]), np.array([1.0]))
