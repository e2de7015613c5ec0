"""Cost-aware thin spanning forests by iterative reweighting.

Each round runs the ribbon contraction sequence on the current weights, then
charges ``1/n^2`` to every edge of the forest it produced.  Over
``N = ceil(n^2 / alpha)`` rounds an edge can only be charged as often as its
weight allows, which bounds the average forest cost; the cheapest round
forest is returned.

Weights are kept as integers scaled by ``n^2`` so the grid arithmetic is
exact.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import networkx as nx

from genus_atsp.exceptions import InvariantBroken, NegativeWeight
from genus_atsp.harness import audit_cuts
from genus_atsp.ribbons import contraction_sequence, is_spanning_forest
from genus_atsp.surface_graph import EmbeddedDigraph, euler_genus

log = logging.getLogger(__name__)

ALPHA = 20


def _snap(value: float) -> float:
    r = round(value)
    return float(r) if abs(value - r) <= 1e-6 * max(1.0, abs(value)) else value


@dataclass
class WeightSchedule:
    """Edge weights as integer multiples of ``1 / scale``."""

    units: dict[int, int]
    scale: int
    iteration: int = 0
    rounds: int = 0

    @classmethod
    def initial(cls, z: Mapping[int, float], n: int, alpha: int = ALPHA) -> "WeightSchedule":
        scale = n * n
        units = {e: 3 * math.floor(_snap(float(v) * scale)) for e, v in z.items()}
        return cls(units, scale, 0, math.ceil(scale / alpha))

    def as_fractions(self) -> dict[int, Fraction]:
        return {e: Fraction(u, self.scale) for e, u in self.units.items()}


def decrement_on_forest(schedule: WeightSchedule, forest) -> WeightSchedule:
    """Subtract ``1/scale`` from every forest edge."""
    units = dict(schedule.units)
    for e in forest:
        if units[e] <= 0:
            raise NegativeWeight(f"edge {e} has weight {units[e]}/{schedule.scale} and cannot be charged")
        units[e] -= 1
    return WeightSchedule(units, schedule.scale, schedule.iteration + 1, schedule.rounds)


def min_cut_units(g, units: Mapping[int, int]) -> int:
    """Global minimum cut of the scaled weights (Stoer-Wagner, exact integers)."""
    emb = g.embedding if isinstance(g, EmbeddedDigraph) else g
    if emb.num_vertices < 2:
        return math.inf
    h = nx.Graph()
    h.add_nodes_from(emb.vertices)
    for e, (u, v) in emb.ends.items():
        if u == v:
            continue
        w = units.get(e, 0)
        if h.has_edge(u, v):
            h[u][v]["weight"] += w
        else:
            h.add_edge(u, v, weight=w)
    value, _ = nx.stoer_wagner(h)
    return value


@dataclass
class RoundRecord:
    index: int
    cost: float
    min_cut_slack: float


@dataclass
class ThinForest:
    edges: frozenset[int]
    components: int
    cost: float
    alpha_hat: float
    s_hat: float
    iteration: int
    genus: int
    rounds: list[RoundRecord] = field(default_factory=list)
    charge: dict[int, int] = field(default_factory=dict)
    initial_units: dict[int, int] = field(default_factory=dict)
    scale: int = 1
    cuts_audited: int = 0
    steps: list[str] = field(default_factory=list)

    def audit_lines(self) -> list[str]:
        """Contraction steps of the returned round, then one line per round."""
        rounds = [f"round {r.index} {r.cost:.12g} {r.min_cut_slack:.12g}" for r in self.rounds]
        return self.steps + rounds


def compute_thin_forest(
    g: EmbeddedDigraph,
    x: Mapping[int, float],
    z: Mapping[int, float],
    genus: int | None = None,
    *,
    alpha: int = ALPHA,
    audit: str = "off",
    seed: int = 0,
    early_exit: bool = False,
    objective: float | None = None,
) -> ThinForest:
    emb = g.embedding
    n = emb.num_vertices
    genus = euler_genus(emb) if genus is None else genus
    target = max(genus, 1)
    if objective is None:
        objective = sum(g.arcs[a].cost * v for a, v in x.items())
    schedule = WeightSchedule.initial(z, n, alpha)
    initial = dict(schedule.units)
    two = 2 * schedule.scale
    charge = {e: 0 for e in emb.ends}
    best = None
    records = []
    if n == 1:
        return ThinForest(frozenset(), 1, 0.0, 0.0, 0.0, 0, genus, scale=schedule.scale)
    for i in range(1, schedule.rounds + 1):
        weights = schedule.as_fractions()
        trace, forest = contraction_sequence(emb, weights, target)
        for e in forest.edges:
            charge[e] += 1
        schedule = decrement_on_forest(schedule, forest.edges)
        cut = min_cut_units(emb, schedule.units)
        if cut < two:
            raise InvariantBroken(
                f"round {i}: weights cross some cut with {cut}/{schedule.scale} < 2"
            )
        cost = sum(g.edge_cost(e) for e in forest.edges)
        records.append(RoundRecord(i, cost, (cut - two) / schedule.scale))
        log.debug("round %d forest cost %.6g", i, cost)
        if best is None or cost < best[1]:
            best = (forest, cost, i, trace)
        if early_exit and cost <= objective:
            break
    forest, cost, idx, trace = best
    acyclic, comps = is_spanning_forest(emb, sorted(forest.edges))
    if not acyclic or comps != forest.components:
        raise InvariantBroken("round forest is not a spanning forest")
    if comps > target:
        raise InvariantBroken(f"forest has {comps} components, more than {target}")
    alpha_hat = 0.0
    audited = 0
    if audit != "off":
        rep = audit_cuts(emb, forest.edges, z, audit, seed)
        alpha_hat, audited = rep.max_ratio, rep.cuts
    s_hat = cost / objective if objective > 0 else (0.0 if cost == 0 else math.inf)
    return ThinForest(
        forest.edges,
        comps,
        cost,
        alpha_hat,
        s_hat,
        idx,
        genus,
        records,
        charge,
        initial,
        schedule.scale,
        audited,
        trace.audit_lines(),
    )
