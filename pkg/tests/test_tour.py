import itertools
import random

import numpy as np
import pytest

from _build import bidirected_cycle, digraph, directed_cycle, random_instances, triangle
from genus_atsp.circulation import Circulation, WalkCover, walks_from_circulation
from genus_atsp.exceptions import GenusATSPError, TooManyComponents
from genus_atsp.harness import brute_force_atsp, permutation_tour_cost
from genus_atsp.heldkarp_lp import normalize_metric
from genus_atsp.tour import (
    ContractedInstance,
    SolverConfig,
    compose_and_shortcut,
    contracted_instance,
    exact_atsp_dp,
    general_atsp_hook,
    is_closed_spanning_walk,
    representatives,
    shortcut,
    solve,
)


def metric(k, rng):
    pts = rng.integers(1, 50, (k, k)).astype(float)
    np.fill_diagonal(pts, 0)
    # close under shortest paths so it is a metric
    for m in range(k):
        pts = np.minimum(pts, pts[:, [m]] + pts[[m], :])
    return ContractedInstance(list(range(k)), pts, {})


def six_vertex_pair():
    # cycles 0-1-2 and 3-4-5, joined by a bidirected bridge 2-3
    return digraph(
        6,
        [(0, 1, 1, None), (1, 2, 1, None), (2, 0, 1, None), (3, 4, 1, None), (4, 5, 1, None), (5, 3, 1, None), (2, 3, 5, 7)],
    )


# --- representatives ------------------------------------------------------------------


def test_single_walk_has_one_representative():
    g = directed_cycle(4)
    cover = walks_from_circulation(g, Circulation({a: 1 for a in g.arc_ids}))
    assert representatives(cover, g) == [0]


def test_three_walks_three_representatives():
    g = digraph(5, [(1, 3, 1, 1), (0, 1, 1, 1), (0, 2, 1, 1), (0, 4, 1, 1)])
    cover = WalkCover([[g.edge_arcs[0][0], g.edge_arcs[0][1]]], [4, 2, 0], 2.0, [1])
    assert representatives(cover, g) == [0, 1, 2, 4]


def test_degenerate_walk_is_its_own_representative():
    assert representatives(WalkCover([], [3], 0.0, [])) == [3]


# --- contracted instance -----------------------------------------------------------------


def test_contracted_cycle_distances():
    g = directed_cycle(4, c=2)
    inst = contracted_instance(g, [0, 1, 2, 3])
    for i, j in itertools.permutations(range(4), 2):
        assert inst.cost[i, j] == 2 * ((j - i) % 4)
        assert g.cost_of(inst.paths[(i, j)]) == inst.cost[i, j]


def test_single_rep_is_empty():
    inst = contracted_instance(triangle(), [1])
    assert inst.k == 1
    assert exact_atsp_dp(inst) == ([0], 0.0)


def test_asymmetry_survives():
    g = digraph(3, [(0, 1, 1, 10), (1, 2, 1, 10), (2, 0, 1, 10)])
    inst = contracted_instance(g, [0, 1])
    assert inst.cost[0, 1] != inst.cost[1, 0]


# --- exact DP ---------------------------------------------------------------------------------


def test_dp_three_reps_matches_both_orders():
    inst = metric(3, np.random.default_rng(3))
    c = inst.cost
    best = min(c[0, 1] + c[1, 2] + c[2, 0], c[0, 2] + c[2, 1] + c[1, 0])
    order, cost = exact_atsp_dp(inst)
    assert cost == best
    assert inst.tour_cost(order) == cost


def test_dp_matches_permutations():
    rng = np.random.default_rng(8)
    for _ in range(60):
        inst = metric(int(rng.integers(2, 9)), rng)
        order, cost = exact_atsp_dp(inst)
        assert cost == permutation_tour_cost(inst.cost.tolist())
        assert sorted(order) == list(range(inst.k))
        assert order[0] == 0


def test_dp_cap():
    inst = metric(6, np.random.default_rng(0))
    with pytest.raises(TooManyComponents):
        exact_atsp_dp(inst, cap=5)


# --- hook ------------------------------------------------------------------------------------------


def test_hook_trivial_and_valid():
    assert general_atsp_hook(ContractedInstance([0], np.zeros((1, 1)), {})) == ([0], 0.0)
    rng = np.random.default_rng(2)
    for _ in range(30):
        inst = metric(int(rng.integers(2, 8)), rng)
        order, cost = general_atsp_hook(inst)
        assert sorted(order) == list(range(inst.k))
        assert cost >= exact_atsp_dp(inst)[1] - 1e-9
        assert cost == pytest.approx(inst.tour_cost(order))


# --- composition --------------------------------------------------------------------------------------


def test_single_walk_is_unchanged():
    g = directed_cycle(4)
    cover = walks_from_circulation(g, Circulation({a: 1 for a in g.arc_ids}))
    inst = contracted_instance(g, representatives(cover, g))
    tour = compose_and_shortcut(g, [0], cover, inst)
    assert tour.arcs == cover.walks[0]
    assert tour.cost == 4


def test_two_walks_joined_by_paths():
    g = six_vertex_pair()
    f = {a: 1 for a in g.arc_ids}
    for a in g.edge_arcs[6]:
        f[a] = 0
    cover = walks_from_circulation(g, Circulation(f))
    reps = representatives(cover, g)
    assert reps == [0, 3]
    inst = contracted_instance(g, reps)
    order, dp = exact_atsp_dp(inst)
    tour = compose_and_shortcut(g, order, cover, inst, do_shortcut=False)
    assert is_closed_spanning_walk(g, tour.arcs)
    assert tour.cost == cover.cost + dp
    walk_arcs = {a for w in cover.walks for a in w}
    assert walk_arcs <= set(tour.arcs)
    assert set(g.edge_arcs[6]) <= set(tour.arcs)
    short = compose_and_shortcut(g, order, cover, inst)
    assert short.cost <= tour.cost


def test_shortcut_never_increases_cost_and_is_idempotent():
    rng = random.Random(4)
    for g in random_instances(20, seed=11):
        g = normalize_metric(g)
        # random closed walk: concatenate shortest round trips from vertex 0
        inst = contracted_instance(g, list(g.vertices))
        order = list(range(1, g.n))
        rng.shuffle(order)
        order = [0] + order
        seq = []
        for i in range(len(order)):
            seq += inst.paths[(order[i], order[(i + 1) % len(order)])]
        once = shortcut(g, seq)
        assert g.cost_of(once) <= g.cost_of(seq) + 1e-9
        assert is_closed_spanning_walk(g, once)
        assert shortcut(g, once) == once


# --- solve ------------------------------------------------------------------------------------------------


def test_bidirected_cycle_end_to_end():
    for n in (3, 5, 7):
        tour = solve(bidirected_cycle(n))
        assert tour.cost == n
        assert tour.certificate["lp"] == pytest.approx(n)


def test_pair_end_to_end():
    g = digraph(2, [(0, 1, 3, 4)])
    tour = solve(g)
    assert sorted(tour.arcs) == [0, 1]
    assert tour.cost == 7


def test_random_instances_within_bound_of_opt():
    for g in random_instances(25, n_hi=9, seed=13):
        tour = solve(g)
        opt = brute_force_atsp(g).opt
        c = tour.certificate
        assert is_closed_spanning_walk(g, tour.arcs)
        assert tour.cost == pytest.approx(g.cost_of(tour.arcs))
        assert tour.cost <= 181 * opt
        assert c["lp"] <= opt + 1e-6
        assert tour.cost >= opt - 1e-9
        assert tour.cost <= c["walks"]["cost"] + c["dp_cost"] + 1e-6
        assert c["path"] == "dp" and c["certified"]


def test_certificate_fields():
    tour = solve(triangle(), SolverConfig(as_permutation=True))
    c = tour.certificate
    for key in ("lp", "forest", "walks", "dp_cost", "tour_cost", "bound", "ratio_vs_lp", "circulation"):
        assert key in c
    assert set(c["forest"]) >= {"k", "alpha_hat", "s_hat"}
    assert set(c["walks"]) == {"k'", "cost"}
    assert sorted(c["permutation"]) == [0, 1, 2]
    assert any(line.startswith("circulation cost=") for line in tour.audit)


def test_hook_path_beyond_cap():
    g = random_instances(1, n_lo=8, n_hi=8, seed=1, modes=("random-rotation",))[0]
    base = solve(g)
    if base.certificate["walks"]["k'"] < 2:
        pytest.skip("instance collapsed to one walk")
    tour = solve(g, SolverConfig(dp_cap=1))
    assert tour.certificate["path"] == "hook"
    assert not tour.certificate["certified"]
    with pytest.raises(TooManyComponents) as info:
        solve(g, SolverConfig(dp_cap=1, hook=None))
    assert info.value.stage == "tour"


def test_stage_errors_are_tagged():
    g = random_instances(1, n_lo=9, n_hi=9, seed=5)[0]
    with pytest.raises(GenusATSPError) as info:
        solve(g, SolverConfig(lp_max_rounds=1))
    assert info.value.stage == "lp"
