"""Pipeline assembly: merge the walk cover into one closed spanning walk.

One representative per walk, an ATSP instance on the representatives under
shortest-path costs, an exact bitmask DP (or a pluggable heuristic beyond the
DP cap), and finally splicing plus shortcutting.
"""

from __future__ import annotations

import heapq
import logging
import math
from collections import Counter
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from genus_atsp.circulation import WalkCover, walk_cover
from genus_atsp.exceptions import CertificateError, GenusATSPError, TooManyComponents
from genus_atsp.heldkarp_lp import normalize_metric, solve_held_karp, symmetrize
from genus_atsp.surface_graph import EmbeddedDigraph, euler_genus
from genus_atsp.thin_forest import ALPHA, compute_thin_forest

log = logging.getLogger(__name__)

DP_CAP = 24
REL_TOL = 1e-6


def representatives(cover: WalkCover, g: EmbeddedDigraph | None = None) -> list[int]:
    """Smallest vertex of every walk, sorted."""
    reps = [min(vs) for vs in _walk_vertex_sets(cover, g)]
    return sorted(reps)


def _walk_vertex_sets(cover: WalkCover, g: EmbeddedDigraph | None) -> list[set[int]]:
    if g is not None:
        return cover.vertex_sets(g)
    # without the graph only the starts are known; starts are walk minima
    return [{s} for s in cover.start] + [{v} for v in cover.degenerate]


def dijkstra(g: EmbeddedDigraph, source: int) -> tuple[dict[int, float], dict[int, int]]:
    """Distances and predecessor arcs from ``source``; ties by vertex id."""
    out = g.out_arcs()
    dist = {source: 0.0}
    pred: dict[int, int] = {}
    heap = [(0.0, source)]
    done = set()
    while heap:
        d, v = heapq.heappop(heap)
        if v in done:
            continue
        done.add(v)
        for a in out[v]:
            arc = g.arcs[a]
            nd = d + arc.cost
            w = arc.head
            if w not in dist or nd < dist[w]:
                dist[w] = nd
                pred[w] = a
                heapq.heappush(heap, (nd, w))
    return dist, pred


def _path(g: EmbeddedDigraph, pred: dict[int, int], source: int, target: int) -> list[int]:
    arcs = []
    v = target
    while v != source:
        a = pred[v]
        arcs.append(a)
        v = g.arcs[a].tail
    arcs.reverse()
    return arcs


@dataclass
class ContractedInstance:
    reps: list[int]
    cost: np.ndarray
    paths: dict[tuple[int, int], list[int]]

    @property
    def k(self) -> int:
        return len(self.reps)

    def tour_cost(self, order: Sequence[int]) -> float:
        k = len(order)
        if k <= 1:
            return 0.0
        return float(sum(self.cost[order[i], order[(i + 1) % k]] for i in range(k)))


def contracted_instance(g: EmbeddedDigraph, reps: Sequence[int]) -> ContractedInstance:
    reps = list(reps)
    if len(set(reps)) != len(reps):
        raise ValueError("representatives must be distinct")
    k = len(reps)
    cost = np.zeros((k, k))
    paths = {}
    for i, r in enumerate(reps):
        dist, pred = dijkstra(g, r)
        for j, s in enumerate(reps):
            if i == j:
                continue
            cost[i, j] = dist[s]
            paths[(i, j)] = _path(g, pred, r, s)
    return ContractedInstance(reps, cost, paths)


def exact_atsp_dp(inst: ContractedInstance, cap: int = DP_CAP) -> tuple[list[int], float]:
    """Optimal Hamiltonian cycle over the representatives (bitmask DP).

    Returns the visiting order as indices into ``inst.reps``, starting at 0.
    """
    k = inst.k
    if k > cap:
        raise TooManyComponents(f"{k} components exceed the DP cap of {cap}")
    if k <= 1:
        return list(range(k)), 0.0
    c = inst.cost
    m = k - 1
    inner = c[1:, 1:]
    size = 1 << m
    dp = np.full((size, m), np.inf)
    parent = np.full((size, m), -1, dtype=np.int16)
    bits = np.arange(m)
    dp[1 << bits, bits] = c[0, 1:]
    for mask in range(1, size):
        row = dp[mask]
        inside = ((mask >> bits) & 1).astype(bool)
        if not inside.any():
            continue
        outside = bits[~inside]
        if outside.size == 0:
            continue
        cand = row[:, None] + inner  # from i (in mask) to j
        cand[~inside] = np.inf
        arg = cand.argmin(axis=0)
        best = cand[arg, bits]
        targets = mask | (1 << outside)
        better = best[outside] < dp[targets, outside]
        tgt, js = targets[better], outside[better]
        dp[tgt, js] = best[js]
        parent[tgt, js] = arg[js]
    full = size - 1
    closing = dp[full] + c[1:, 0]
    last = int(np.argmin(closing))
    total = float(closing[last])
    order = []
    mask, j = full, last
    while j >= 0:
        order.append(j + 1)
        pj = int(parent[mask, j])
        mask ^= 1 << j
        j = pj
    order.append(0)
    order.reverse()
    return order, total


def general_atsp_hook(inst: ContractedInstance) -> tuple[list[int], float]:
    """Nearest-neighbour tour improved by pairwise position swaps.

    No approximation guarantee; used beyond the DP cap.
    """
    k = inst.k
    if k <= 1:
        return list(range(k)), 0.0
    c = inst.cost
    order = [0]
    left = set(range(1, k))
    while left:
        cur = order[-1]
        nxt = min(left, key=lambda j: (c[cur, j], j))
        order.append(nxt)
        left.remove(nxt)
    best = inst.tour_cost(order)
    improved = True
    while improved:
        improved = False
        for i in range(1, k - 1):
            for j in range(i + 1, k):
                cand = list(order)
                cand[i], cand[j] = cand[j], cand[i]
                cost = inst.tour_cost(cand)
                if cost < best - 1e-12:
                    order, best = cand, cost
                    improved = True
    return order, best


# --- composition ------------------------------------------------------------


@dataclass
class Tour:
    arcs: list[int]
    start: int
    cost: float
    certificate: dict = field(default_factory=dict)
    audit: list[str] = field(default_factory=list)

    def vertices(self, g: EmbeddedDigraph) -> list[int]:
        if not self.arcs:
            return [self.start]
        return [g.arcs[a].tail for a in self.arcs]

    def permutation(self, g: EmbeddedDigraph) -> list[int]:
        seen = []
        for v in self.vertices(g):
            if v not in seen:
                seen.append(v)
        return seen


def _rotate_to(g: EmbeddedDigraph, walk: list[int], v: int) -> list[int]:
    for i, a in enumerate(walk):
        if g.arcs[a].tail == v:
            return walk[i:] + walk[:i]
    raise ValueError(f"walk does not visit {v}")


def _cheapest_arcs(g: EmbeddedDigraph) -> dict[tuple[int, int], int]:
    best: dict[tuple[int, int], int] = {}
    for a in g.arc_ids:
        arc = g.arcs[a]
        key = (arc.tail, arc.head)
        if key not in best or arc.cost < g.arcs[best[key]].cost:
            best[key] = a
    return best


def shortcut(g: EmbeddedDigraph, arcs: list[int]) -> list[int]:
    """Drop repeated visits while a direct arc is no more expensive.

    Replaces ``p -> w -> q`` by ``p -> q`` when ``w`` is visited elsewhere and
    an arc ``p -> q`` exists at no greater cost; a detour ``p -> w -> p`` is
    removed outright.  Runs to a fixpoint, so applying it twice is the same
    as applying it once.
    """
    if len(arcs) <= 2:
        return list(arcs)
    direct = _cheapest_arcs(g)
    start = g.arcs[arcs[0]].tail
    seq = list(arcs)
    changed = True
    while changed:
        changed = False
        verts = [g.arcs[a].tail for a in seq]
        counts = Counter(verts)
        n = len(seq)
        for i in range(n):
            w = verts[i]
            if counts[w] < 2 or n <= 2:
                continue
            p, q = verts[i - 1], verts[(i + 1) % n]
            a_in, a_out = seq[i - 1], seq[i]
            old = g.arcs[a_in].cost + g.arcs[a_out].cost
            # rotate so positions i-1, i sit at 0, 1
            rot = seq[i - 1 :] + seq[: i - 1] if i >= 1 else seq[-1:] + seq[:-1]
            if p == q:
                if counts[p] < 2 and n == 2:
                    continue
                seq = rot[2:]
            else:
                a = direct.get((p, q))
                if a is None or g.arcs[a].cost > old + 1e-12 * max(1.0, old):
                    continue
                seq = [a] + rot[2:]
            changed = True
            break
    for i, a in enumerate(seq):
        if g.arcs[a].tail == start:
            return seq[i:] + seq[:i]
    return seq


def compose_and_shortcut(
    g: EmbeddedDigraph,
    order: Sequence[int],
    cover: WalkCover,
    inst: ContractedInstance,
    do_shortcut: bool = True,
) -> Tour:
    """Splice every walk in at its representative and follow the rep tour."""
    by_rep = {}
    for walk, vs in zip(cover.walks, cover.vertex_sets(g)):
        r = min(vs)
        by_rep[r] = _rotate_to(g, walk, r)
    for v in cover.degenerate:
        by_rep[v] = []
    k = len(order)
    seq: list[int] = []
    for pos, i in enumerate(order):
        seq.extend(by_rep[inst.reps[i]])
        if k > 1:
            seq.extend(inst.paths[(i, order[(pos + 1) % k])])
    start = inst.reps[order[0]] if order else g.vertices[0]
    if do_shortcut:
        seq = shortcut(g, seq)
    return Tour(seq, start, float(g.cost_of(seq)))


def expand_to_original(original: EmbeddedDigraph, normalized: EmbeddedDigraph, arcs: Sequence[int]) -> list[int]:
    """Replace arcs whose normalized cost undercuts the original by shortest paths."""
    cache: dict[int, dict[int, int]] = {}
    out = []
    for a in arcs:
        orig, norm = original.arcs[a], normalized.arcs[a]
        if norm.cost >= orig.cost:
            out.append(a)
            continue
        if orig.tail not in cache:
            cache[orig.tail] = dijkstra(original, orig.tail)[1]
        out.extend(_path(original, cache[orig.tail], orig.tail, orig.head))
    return out


def is_closed_spanning_walk(g: EmbeddedDigraph, arcs: Sequence[int], start: int | None = None) -> bool:
    if not arcs:
        return g.n == 1
    for a, b in zip(arcs, list(arcs[1:]) + [arcs[0]]):
        if a not in g.arcs or g.arcs[a].head != g.arcs[b].tail:
            return False
    return {g.arcs[a].tail for a in arcs} == set(g.vertices)


# --- the full pipeline --------------------------------------------------------


@dataclass
class SolverConfig:
    alpha: int = ALPHA
    dp_cap: int = DP_CAP
    # set to None to refuse instances beyond the DP cap
    hook: Callable[[ContractedInstance], tuple[list[int], float]] | None = general_atsp_hook
    lp_tol: float = 1e-6
    lp_max_rounds: int | None = None
    lp_backend: str = "simplex"
    thin_audit: str = "off"
    seed: int = 0
    early_exit: bool = False
    shortcut: bool = True
    as_permutation: bool = False

    @property
    def certified_alpha(self) -> int:
        return 3 * self.alpha


@contextmanager
def _stage(name: str):
    try:
        yield
    except GenusATSPError as err:
        if err.stage is None:
            err.stage = name
        raise


def _leq(lhs: float, rhs: float) -> bool:
    return lhs <= rhs + REL_TOL * max(1.0, abs(rhs))


def solve(g: EmbeddedDigraph, config: SolverConfig | None = None) -> Tour:
    """Run the whole pipeline and certify each stage's guarantee."""
    cfg = config or SolverConfig()
    audit: list[str] = []
    a_cert = cfg.certified_alpha
    with _stage("normalize"):
        work = normalize_metric(g)
        genus = euler_genus(work.embedding)
    with _stage("lp"):
        lp = solve_held_karp(work, tol=cfg.lp_tol, max_rounds=cfg.lp_max_rounds, backend=cfg.lp_backend)
        z = symmetrize(work, lp.x)
        audit += lp.dump_lines()
    obj = lp.objective
    with _stage("thin_forest"):
        forest = compute_thin_forest(
            work, lp.x, z, genus,
            alpha=cfg.alpha, audit=cfg.thin_audit, seed=cfg.seed,
            early_exit=cfg.early_exit, objective=obj,
        )
        audit += forest.audit_lines()
        if not _leq(forest.cost, a_cert * obj):
            raise CertificateError(f"forest cost {forest.cost} exceeds {a_cert} x LP {obj}")
        if forest.alpha_hat > a_cert + REL_TOL:
            raise CertificateError(f"forest crosses a cut {forest.alpha_hat:.4g} times its weight")
    with _stage("circulation"):
        cover, bounds, circ = walk_cover(work, forest.edges, lp.x, a_cert)
        slack = bounds.grid_slack(work)
        int_slack = bounds.integer_slack(work)
        cover_bound = (2 * a_cert + a_cert) * obj
        if not _leq(cover.cost, cover_bound + slack + int_slack):
            raise CertificateError(f"walk cover cost {cover.cost} exceeds its bound")
        audit.append(
            f"circulation cost={cover.cost:.12g} bound={cover_bound:.12g} slack={slack:.12g}"
        )
    with _stage("tour"):
        reps = representatives(cover, work)
        inst = contracted_instance(work, reps)
        if inst.k <= cfg.dp_cap or cfg.hook is None:
            order, dp_cost = exact_atsp_dp(inst, cfg.dp_cap)
            path = "dp"
        else:
            log.warning("%d components exceed the DP cap; no certified ratio", inst.k)
            order, dp_cost = cfg.hook(inst)
            path = "hook"
        tour = compose_and_shortcut(work, order, cover, inst, cfg.shortcut)
        if not _leq(tour.cost, cover.cost + dp_cost):
            raise CertificateError("composed tour costs more than walks plus representative tour")
        arcs = expand_to_original(g, work, tour.arcs)
        cost = float(g.cost_of(arcs))
        if not is_closed_spanning_walk(g, arcs) and g.n > 1:
            raise CertificateError("final walk is not a closed spanning walk of the input")
    bound = cover_bound + slack + int_slack + dp_cost
    certificate = {
        "n": g.n,
        "arcs": len(g.arcs),
        "genus": genus,
        "lp": obj,
        "lp_rounds": lp.rounds,
        "forest": {
            "k": forest.components,
            "alpha_hat": forest.alpha_hat,
            "s_hat": forest.s_hat,
            "cost": forest.cost,
            "round": forest.iteration,
            "cuts_audited": forest.cuts_audited,
        },
        "circulation": {
            "cost": circ.cost(work),
            "bound": cover_bound,
            "slack": slack,
            "integer_slack": int_slack,
        },
        "walks": {"k'": cover.k, "cost": cover.cost},
        "dp_cost": dp_cost,
        "path": path,
        "certified": path == "dp",
        "tour_cost": cost,
        "bound": bound,
        "ratio_vs_lp": cost / obj if obj > 0 else (1.0 if cost == 0 else math.inf),
    }
    start = g.arcs[arcs[0]].tail if arcs else g.vertices[0]
    result = Tour(arcs, start, cost, certificate, audit)
    if cfg.as_permutation:
        certificate["permutation"] = result.permutation(g)
    return result
