"""From a thin forest to a few cheap closed walks covering every vertex.

Orient each forest edge along its cheaper arc, demand one unit of flow on
those arcs, allow ``2 * alpha * x(a)`` extra on every arc, and pick an
integral circulation inside these bounds (Hoffman).  The flow multigraph is
Eulerian on each component; its Euler circuits are the walks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from genus_atsp.exceptions import InfeasibleCirculation, MissingArc, NotEulerian
from genus_atsp.flows import FlowNetwork
from genus_atsp.surface_graph import EmbeddedDigraph

CERTIFIED_ALPHA = 60


def orient_forest(g: EmbeddedDigraph, forest: Iterable[int]) -> list[int]:
    """Cheaper arc of every forest edge; ties go to the smaller (tail, head)."""
    out = []
    for e in sorted(forest):
        present = [a for a in g.edge_arcs[e] if a is not None]
        if not present:
            raise MissingArc(f"edge {e} carries no arc")
        out.append(min(present, key=lambda a: (g.arcs[a].cost, g.arcs[a].tail, g.arcs[a].head)))
    return sorted(out)


def _ceil_fuzzy(value: float) -> int:
    r = round(value)
    if abs(value - r) <= 1e-9 * max(1.0, abs(value)):
        return int(r)
    return math.ceil(value)


@dataclass
class BoundedArcNetwork:
    """Per-arc bounds.

    ``upper`` is the exact real bound ``l + 2*alpha*x``; ``upper_grid`` rounds
    the extra part up to a multiple of ``1/scale``; ``capacity`` is the
    integer bound handed to the flow computation.
    """

    lower: dict[int, int]
    upper: dict[int, float]
    upper_grid: dict[int, float]
    capacity: dict[int, int]
    forest_arcs: list[int]
    alpha: float
    scale: int

    def grid_slack(self, g: EmbeddedDigraph) -> float:
        return sum(g.arcs[a].cost * (self.upper_grid[a] - self.upper[a]) for a in self.upper)

    def integer_slack(self, g: EmbeddedDigraph) -> float:
        return sum(g.arcs[a].cost * (self.capacity[a] - self.upper_grid[a]) for a in self.upper)


def hoffman_bounds(
    g: EmbeddedDigraph,
    forest_arcs: Iterable[int],
    x: Mapping[int, float],
    alpha: float = CERTIFIED_ALPHA,
) -> BoundedArcNetwork:
    scale = g.n * g.n
    tree = set(forest_arcs)
    lower, upper, grid, cap = {}, {}, {}, {}
    for a in g.arc_ids:
        lo = 1 if a in tree else 0
        extra = 2.0 * alpha * max(0.0, x.get(a, 0.0))
        units = _ceil_fuzzy(extra * scale)
        lower[a] = lo
        upper[a] = lo + extra
        grid[a] = lo + units / scale
        cap[a] = lo + -(-units // scale)
    return BoundedArcNetwork(lower, upper, grid, cap, sorted(tree), alpha, scale)


@dataclass
class Circulation:
    f: dict[int, int]

    def cost(self, g: EmbeddedDigraph) -> float:
        return sum(g.arcs[a].cost * v for a, v in self.f.items())


def feasible_integer_circulation(g: EmbeddedDigraph, bounds: BoundedArcNetwork) -> Circulation:
    """Integral ``f`` with ``lower <= f <= capacity`` and conservation.

    Standard reduction: route ``f - lower`` as a max-flow from a super source
    feeding the lower-bound surpluses to a super sink draining the deficits.
    """
    verts = list(g.vertices)
    index = {v: i for i, v in enumerate(verts)}
    src, snk = len(verts), len(verts) + 1
    net = FlowNetwork(len(verts) + 2)
    excess = [0] * len(verts)
    handle = {}
    for a in g.arc_ids:
        arc = g.arcs[a]
        lo, hi = bounds.lower[a], bounds.capacity[a]
        if hi < lo:
            raise InfeasibleCirculation(f"arc {a}: lower bound {lo} exceeds capacity {hi}")
        excess[index[arc.head]] += lo
        excess[index[arc.tail]] -= lo
        if hi > lo:
            handle[a] = net.add_edge(index[arc.tail], index[arc.head], hi - lo)
    need = 0
    for i, ex in enumerate(excess):
        if ex > 0:
            net.add_edge(src, i, ex)
            need += ex
        elif ex < 0:
            net.add_edge(i, snk, -ex)
    value = net.max_flow(src, snk)
    if value < need:
        side = net.source_side(src)
        cut = frozenset(verts[i] for i in side if i < len(verts))
        raise InfeasibleCirculation(
            f"only {value} of {need} units routable; Hoffman's condition fails on {sorted(cut)}",
            cut,
        )
    f = {a: bounds.lower[a] + (net.flow(handle[a]) if a in handle else 0) for a in g.arc_ids}
    return Circulation(f)


@dataclass
class WalkCover:
    """Closed walks as arc sequences, plus single-vertex walks."""

    walks: list[list[int]]
    degenerate: list[int]
    cost: float
    start: list[int] = field(default_factory=list)

    @property
    def k(self) -> int:
        return len(self.walks) + len(self.degenerate)

    def vertex_sets(self, g: EmbeddedDigraph) -> list[set[int]]:
        out = []
        for w, s in zip(self.walks, self.start):
            vs = {s}
            vs.update(g.arcs[a].head for a in w)
            out.append(vs)
        out.extend({v} for v in self.degenerate)
        return out


def _euler_circuit(g: EmbeddedDigraph, start: int, out: dict[int, list[int]]) -> list[int]:
    # Hierholzer; `out[v]` is a stack of arc copies, consumed from the end
    stack: list[tuple[int, int | None]] = [(start, None)]
    circuit: list[int] = []
    while stack:
        v, via = stack[-1]
        if out[v]:
            a = out[v].pop()
            stack.append((g.arcs[a].head, a))
        else:
            stack.pop()
            if via is not None:
                circuit.append(via)
    circuit.reverse()
    return circuit


def walks_from_circulation(g: EmbeddedDigraph, circ: Circulation, forest_arcs: Iterable[int] = ()) -> WalkCover:
    f = circ.f
    for a in forest_arcs:
        if f.get(a, 0) < 1:
            raise NotEulerian(f"forest arc {a} carries no flow")
    indeg = {v: 0 for v in g.vertices}
    outdeg = {v: 0 for v in g.vertices}
    out: dict[int, list[int]] = {v: [] for v in g.vertices}
    for a in sorted(f, reverse=True):
        arc = g.arcs[a]
        outdeg[arc.tail] += f[a]
        indeg[arc.head] += f[a]
        out[arc.tail].extend([a] * f[a])
    for v in g.vertices:
        if indeg[v] != outdeg[v]:
            raise NotEulerian(f"vertex {v}: in-degree {indeg[v]} != out-degree {outdeg[v]}")
    walks, starts, degenerate = [], [], []
    total_arcs = sum(f.values())
    used = 0
    for v in g.vertices:
        if out[v]:
            w = _euler_circuit(g, v, out)
            walks.append(w)
            starts.append(v)
            used += len(w)
    if used != total_arcs:
        raise NotEulerian("flow multigraph is not a union of closed walks")
    covered = set(starts)
    for w in walks:
        covered.update(g.arcs[a].head for a in w)
    degenerate = [v for v in g.vertices if v not in covered]
    cost = sum(g.arcs[a].cost for w in walks for a in w)
    return WalkCover(walks, degenerate, cost, starts)


def walk_cover(
    g: EmbeddedDigraph,
    forest: Iterable[int],
    x: Mapping[int, float],
    alpha: float = CERTIFIED_ALPHA,
):
    """Orient, bound, circulate and decompose; returns ``(cover, bounds, circulation)``."""
    arcs = orient_forest(g, forest)
    bounds = hoffman_bounds(g, arcs, x, alpha)
    circ = feasible_integer_circulation(g, bounds)
    return walks_from_circulation(g, circ, arcs), bounds, circ
