"""Held-Karp relaxation over the arcs of the input digraph.

The LP keeps only flow conservation and the subtour cuts
``x(delta_out(U)) >= 1``; there is no degree-one equality, so every feasible
point lives on the given arcs.  Cuts are generated lazily: start from the
singleton cuts, solve, separate with min s-t cuts from a fixed root, repeat.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.sparse.csgraph import shortest_path

from genus_atsp.exceptions import SolverStall
from genus_atsp.flows import FlowNetwork
from genus_atsp.simplex import get_backend
from genus_atsp.surface_graph import EmbeddedDigraph

log = logging.getLogger(__name__)

FEAS_TOL = 1e-6


@dataclass
class LpSolution:
    x: dict[int, float]
    objective: float
    cuts: list[frozenset[int]] = field(default_factory=list)
    rounds: int = 0
    backend: str = "simplex"

    def dump_lines(self) -> list[str]:
        return [f"x {a} {v:.12g}" for a, v in sorted(self.x.items()) if v != 0.0]


SymWeights = dict  # edge id -> z value


# --- metric normalization ---------------------------------------------------


def _dense_costs(g: EmbeddedDigraph) -> tuple[np.ndarray, dict[int, int]]:
    index = {v: i for i, v in enumerate(g.vertices)}
    n = len(index)
    dense = np.full((n, n), np.inf)
    for arc in g.arcs.values():
        i, j = index[arc.tail], index[arc.head]
        if i != j:
            dense[i, j] = min(dense[i, j], arc.cost)
    np.fill_diagonal(dense, 0.0)
    return dense, index


def all_pairs_shortest_paths(g: EmbeddedDigraph) -> tuple[np.ndarray, np.ndarray, dict[int, int]]:
    """Distances and predecessor matrix (Floyd-Warshall via scipy)."""
    dense, index = _dense_costs(g)
    dist, pred = shortest_path(dense, method="FW", directed=True, return_predecessors=True)
    return dist, pred, index


def normalize_metric(g: EmbeddedDigraph) -> EmbeddedDigraph:
    """Replace each arc cost by the shortest directed path cost tail -> head."""
    dist, _, index = all_pairs_shortest_paths(g)
    costs = {}
    for a, arc in g.arcs.items():
        d = float(dist[index[arc.tail], index[arc.head]])
        costs[a] = min(arc.cost, d)
    return g.with_costs(costs)


# --- separation -------------------------------------------------------------


def out_cut_value(g: EmbeddedDigraph, x: Mapping[int, float], side) -> float:
    side = set(side)
    return sum(
        x.get(a, 0.0) for a, arc in g.arcs.items() if arc.tail in side and arc.head not in side
    )


def _min_cut(g: EmbeddedDigraph, x: Mapping[int, float], s: int, t: int) -> tuple[float, frozenset[int]]:
    index = {v: i for i, v in enumerate(g.vertices)}
    net = FlowNetwork(len(index))
    for a in g.arc_ids:
        val = x.get(a, 0.0)
        if val > 0:
            arc = g.arcs[a]
            net.add_edge(index[arc.tail], index[arc.head], val)
    value = net.max_flow(index[s], index[t], eps=1e-12)
    side = net.source_side(index[s], eps=1e-12)
    return value, frozenset(g.vertices[i] for i in side)


def violated_cuts(g: EmbeddedDigraph, x: Mapping[int, float], tol: float = FEAS_TOL) -> list[frozenset[int]]:
    """All distinct violated sets found by the root-based min-cut sweep."""
    if g.n < 2:
        return []
    root = g.vertices[0]
    found: list[frozenset[int]] = []
    for t in g.vertices[1:]:
        for s, sink in ((root, t), (t, root)):
            value, side = _min_cut(g, x, s, sink)
            if value < 1 - tol and side not in found:
                found.append(side)
    return found


def separate_subtour(g: EmbeddedDigraph, x: Mapping[int, float], tol: float = FEAS_TOL):
    """Some ``U`` with ``x(delta_out(U)) < 1 - tol``, or ``None``."""
    cuts = violated_cuts(g, x, tol)
    return cuts[0] if cuts else None


# --- solve ------------------------------------------------------------------


def solve_held_karp(
    g: EmbeddedDigraph,
    *,
    tol: float = FEAS_TOL,
    max_rounds: int | None = None,
    backend="simplex",
) -> LpSolution:
    backend = get_backend(backend)
    arcs = list(g.arc_ids)
    col = {a: k for k, a in enumerate(arcs)}
    verts = list(g.vertices)
    c = np.array([g.arcs[a].cost for a in arcs])
    # conservation rows; the last one is implied by the others
    a_eq = np.zeros((max(len(verts) - 1, 0), len(arcs)))
    vrow = {v: i for i, v in enumerate(verts[:-1])}
    for a in arcs:
        arc = g.arcs[a]
        if arc.tail in vrow:
            a_eq[vrow[arc.tail], col[a]] += 1.0
        if arc.head in vrow:
            a_eq[vrow[arc.head], col[a]] -= 1.0
    b_eq = np.zeros(len(a_eq))

    cuts: list[frozenset[int]] = [frozenset([v]) for v in verts] if len(verts) > 1 else []
    seen = set(cuts)
    limit = 10 * len(arcs) if max_rounds is None else max_rounds

    def cut_row(side: frozenset[int]) -> np.ndarray:
        row = np.zeros(len(arcs))
        for a in arcs:
            arc = g.arcs[a]
            if arc.tail in side and arc.head not in side:
                row[col[a]] = 1.0
        return row

    rows = [cut_row(u) for u in cuts]
    rounds = 0
    while True:
        rounds += 1
        a_ge = np.array(rows) if rows else np.zeros((0, len(arcs)))
        xv, obj = backend.solve(c, a_eq, b_eq, a_ge, np.ones(len(rows)))
        x = {a: float(xv[col[a]]) for a in arcs}
        new = [u for u in violated_cuts(g, x, tol) if u not in seen]
        log.debug("round %d objective %.9g new cuts %d", rounds, obj, len(new))
        if not new:
            return LpSolution(x, obj, cuts, rounds, backend.name)
        if rounds >= limit:
            raise SolverStall(f"cut loop exceeded {limit} rounds")
        for u in new:
            seen.add(u)
            cuts.append(u)
            rows.append(cut_row(u))


def symmetrize(g: EmbeddedDigraph, x: Mapping[int, float]) -> SymWeights:
    """Per-edge sum of the LP values on its two arcs."""
    return {
        e: sum(x.get(a, 0.0) for a in pair if a is not None) for e, pair in sorted(g.edge_arcs.items())
    }
