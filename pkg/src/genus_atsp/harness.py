"""Instance generation, brute-force oracles and cut auditing."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from genus_atsp.exceptions import TooLarge
from genus_atsp.surface_graph import Arc, EmbeddedDigraph, Embedding

MODES = ("planar", "random-rotation", "add-crosscaps")


@dataclass(frozen=True)
class GenSpec:
    """Recipe for a random embedded instance.

    ``mode`` is ``planar``, ``random-rotation`` or ``add-crosscaps:<k>``;
    ``cost`` is ``uniform`` (integers in [1, 100]) or ``skew:<lambda>``, where
    one direction of each edge costs ``(1 + lambda)`` times the other.
    """

    n: int
    density: float = 0.5
    mode: str = "planar"
    cost: str = "uniform"
    seed: int = 0
    bidirected: float = 0.7
    signature_prob: float = 0.0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("instances need at least 2 vertices")
        if not 0.0 <= self.density <= 1.0:
            raise ValueError("density must lie in [0, 1]")
        kind = self.mode.split(":", 1)[0]
        if kind not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if kind == "add-crosscaps" and not self.mode.split(":", 1)[1:]:
            raise ValueError("add-crosscaps needs a count, e.g. add-crosscaps:2")
        if self.cost != "uniform" and not self.cost.startswith("skew:"):
            raise ValueError(f"unknown cost model {self.cost!r}")


def _spanning_tree(n: int, edges: Sequence[tuple[int, int]], order: Iterable[int]) -> set[int]:
    parent = list(range(n))

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    tree = set()
    for k in order:
        a, b = find(edges[k][0]), find(edges[k][1])
        if a != b:
            parent[a] = b
            tree.add(k)
    return tree


def _delaunay_edges(points: np.ndarray) -> list[tuple[int, int]]:
    from scipy.spatial import Delaunay

    tri = Delaunay(points)
    out = set()
    for simplex in tri.simplices:
        for i, j in itertools.combinations(sorted(int(v) for v in simplex), 2):
            out.add((i, j))
    return sorted(out)


def _planar(spec: GenSpec, rng: np.random.Generator):
    n = spec.n
    while True:
        pts = rng.random((n, 2))
        if n == 2:
            all_edges = [(0, 1)]
            break
        try:
            all_edges = _delaunay_edges(pts)
            break
        except Exception:  # degenerate point set; redraw
            continue
    tree = _spanning_tree(n, all_edges, rng.permutation(len(all_edges)))
    keep = [k for k in range(len(all_edges)) if k in tree or rng.random() < spec.density]
    edges = [all_edges[k] for k in keep]
    rotation = {}
    for v in range(n):
        inc = []
        for e, (a, b) in enumerate(edges):
            if v in (a, b):
                w = b if v == a else a
                angle = math.atan2(pts[w, 1] - pts[v, 1], pts[w, 0] - pts[v, 0])
                inc.append((angle, (e, 0 if v == a else 1)))
        rotation[v] = [end for _, end in sorted(inc)]
    tree_edges = {keep.index(k) for k in tree}
    return edges, rotation, {}, tree_edges


def _random_rotation(spec: GenSpec, rng: np.random.Generator):
    n = spec.n
    pairs = set()
    for i in range(1, n):
        pairs.add((int(rng.integers(0, i)), i))
    tree = set(pairs)
    for i, j in itertools.combinations(range(n), 2):
        if (i, j) not in tree and rng.random() < spec.density:
            pairs.add((i, j))
    edges = sorted(pairs)
    rotation = {v: [] for v in range(n)}
    for e, (a, b) in enumerate(edges):
        rotation[a].append((e, 0))
        rotation[b].append((e, 1))
    for v in range(n):
        rotation[v] = [rotation[v][k] for k in rng.permutation(len(rotation[v]))]
    signature = {e: (-1 if rng.random() < spec.signature_prob else 1) for e in range(len(edges))}
    tree_edges = {edges.index(p) for p in tree}
    return edges, rotation, signature, tree_edges


def _costs(spec: GenSpec, rng: np.random.Generator, m: int) -> list[tuple[float, float]]:
    out = []
    skew = None if spec.cost == "uniform" else float(spec.cost.split(":", 1)[1])
    for _ in range(m):
        if skew is None:
            out.append((float(rng.integers(1, 101)), float(rng.integers(1, 101))))
        else:
            base = float(rng.integers(1, 101))
            hi = float(round(base * (1.0 + skew)))
            out.append((base, hi) if rng.random() < 0.5 else (hi, base))
    return out


def generate(spec: GenSpec) -> EmbeddedDigraph:
    rng = np.random.default_rng(spec.seed)
    kind, _, arg = spec.mode.partition(":")
    if kind == "random-rotation":
        edges, rotation, signature, tree = _random_rotation(spec, rng)
    else:
        edges, rotation, signature, tree = _planar(spec, rng)
        if kind == "add-crosscaps":
            free = sorted(set(range(len(edges))) - tree)
            k = min(int(arg), len(free))
            for e in sorted(int(v) for v in rng.choice(free, size=k, replace=False)) if k else []:
                signature[e] = -1
    m = len(edges)
    directions = []
    for _ in range(m):
        if rng.random() < spec.bidirected:
            directions.append([True, True])
        else:
            fwd = bool(rng.random() < 0.5)
            directions.append([fwd, not fwd])
    costs = _costs(spec, rng, m)

    def strongly_connected() -> bool:
        fwd: dict[int, list[int]] = {v: [] for v in range(spec.n)}
        bwd: dict[int, list[int]] = {v: [] for v in range(spec.n)}
        for (a, b), (f, r) in zip(edges, directions):
            if f:
                fwd[a].append(b)
                bwd[b].append(a)
            if r:
                fwd[b].append(a)
                bwd[a].append(b)
        for adj in (fwd, bwd):
            seen = {0}
            stack = [0]
            while stack:
                for w in adj[stack.pop()]:
                    if w not in seen:
                        seen.add(w)
                        stack.append(w)
            if len(seen) < spec.n:
                return False
        return True

    for e in rng.permutation(m):
        if strongly_connected():
            break
        directions[e] = [True, True]

    arcs = {}
    edge_arcs = {}
    aid = 0
    for e, ((a, b), dirs) in enumerate(zip(edges, directions)):
        slots: list[int | None] = [None, None]
        for slot, (present, (t, h)) in enumerate(zip(dirs, ((a, b), (b, a)))):
            if present:
                arcs[aid] = Arc(aid, t, h, costs[e][slot])
                slots[slot] = aid
                aid += 1
        edge_arcs[e] = (slots[0], slots[1])
    emb = Embedding.from_rotation(rotation, signature, vertices=range(spec.n))
    return EmbeddedDigraph(emb, arcs, edge_arcs)


# --- oracles ----------------------------------------------------------------


def metric_closure(g: EmbeddedDigraph) -> list[list[float]]:
    """All-pairs shortest path costs by a plain Floyd-Warshall."""
    idx = {v: i for i, v in enumerate(g.vertices)}
    n = len(idx)
    d = [[0.0 if i == j else math.inf for j in range(n)] for i in range(n)]
    for arc in g.arcs.values():
        i, j = idx[arc.tail], idx[arc.head]
        if i != j and arc.cost < d[i][j]:
            d[i][j] = arc.cost
    for k in range(n):
        dk = d[k]
        for i in range(n):
            dik = d[i][k]
            if dik == math.inf:
                continue
            di = d[i]
            for j in range(n):
                if dik + dk[j] < di[j]:
                    di[j] = dik + dk[j]
    return d


@dataclass
class OracleResult:
    opt: float
    tour: list[int]
    closure: list[list[float]] = field(repr=False, default_factory=list)


def brute_force_atsp(g: EmbeddedDigraph, limit: int = 12) -> OracleResult:
    """Exact ATSP optimum (minimum closed spanning walk) for small instances."""
    n = g.n
    if n > limit:
        raise TooLarge(f"brute force limited to {limit} vertices, got {n}")
    d = metric_closure(g)
    verts = list(g.vertices)
    if n == 1:
        return OracleResult(0.0, verts, d)
    full = (1 << (n - 1)) - 1
    # best[(mask, j)]: cheapest path 0 -> ... -> j+1 visiting exactly mask
    best: dict[tuple[int, int], tuple[float, int]] = {}
    for j in range(n - 1):
        best[(1 << j, j)] = (d[0][j + 1], -1)
    for mask in range(1, full + 1):
        for j in range(n - 1):
            if (mask, j) not in best:
                continue
            cost, _ = best[(mask, j)]
            for k in range(n - 1):
                if mask & (1 << k):
                    continue
                key = (mask | (1 << k), k)
                cand = cost + d[j + 1][k + 1]
                if key not in best or cand < best[key][0]:
                    best[key] = (cand, j)
    end = min(range(n - 1), key=lambda j: best[(full, j)][0] + d[j + 1][0])
    opt = best[(full, end)][0] + d[end + 1][0]
    order = []
    mask, j = full, end
    while j >= 0:
        order.append(j + 1)
        _, prev = best[(mask, j)]
        mask ^= 1 << j
        j = prev
    order.append(0)
    order.reverse()
    return OracleResult(float(opt), [verts[i] for i in order], d)


def permutation_tour_cost(d: Sequence[Sequence[float]]) -> float:
    """Minimum Hamiltonian cycle cost on a complete cost matrix by enumeration."""
    k = len(d)
    if k <= 1:
        return 0.0
    best = math.inf
    for perm in itertools.permutations(range(1, k)):
        cyc = (0,) + perm
        cost = sum(d[cyc[i]][cyc[(i + 1) % k]] for i in range(k))
        best = min(best, cost)
    return best


# --- cut auditing -----------------------------------------------------------


@dataclass
class CutAudit:
    max_ratio: float
    min_cut: float
    cuts: int
    worst_cut: frozenset[int] | None = None


def _cut_matrix(g: Embedding, masks: np.ndarray) -> tuple[np.ndarray, list[int]]:
    idx = {v: i for i, v in enumerate(g.vertices)}
    edges = list(g.edge_ids)
    u = np.array([idx[g.ends[e][0]] for e in edges], dtype=np.int64)
    v = np.array([idx[g.ends[e][1]] for e in edges], dtype=np.int64)
    bu = (masks[:, None] >> u[None, :]) & 1
    bv = (masks[:, None] >> v[None, :]) & 1
    return bu != bv, edges


def cut_masks(n: int, mode: str = "exhaustive", seed: int = 0) -> np.ndarray:
    """Bitmasks of cut sides.

    ``exhaustive`` lists each of the ``2**(n-1) - 1`` cuts once (the last
    vertex is always outside); ``sample:<k>`` draws ``k`` random proper
    subsets, reproducibly under ``seed``.
    """
    if mode == "exhaustive":
        if n > 24:
            raise TooLarge("exhaustive cut enumeration is limited to 24 vertices")
        return np.arange(1, 1 << (n - 1), dtype=np.int64)
    if mode.startswith("sample:"):
        k = int(mode.split(":", 1)[1])
        rng = np.random.default_rng(seed)
        out = np.empty(k, dtype=np.int64)
        full = (1 << n) - 1
        got = 0
        while got < k:
            bits = rng.integers(0, 2, size=n)
            mask = int(sum(int(b) << i for i, b in enumerate(bits)))
            if 0 < mask < full:
                out[got] = mask
                got += 1
        return out
    raise ValueError(f"unknown audit mode {mode!r}")


def audit_cuts(
    g: Embedding,
    edges: Iterable[int],
    z: Mapping[int, float],
    mode: str = "exhaustive",
    seed: int = 0,
) -> CutAudit:
    """Max of ``|W & delta(U)| / z(delta(U))`` and min of ``z(delta(U))``.

    ``edges`` may repeat an edge id (walks); repeats count with multiplicity.
    """
    if g.num_vertices < 2:
        return CutAudit(0.0, math.inf, 0)
    masks = cut_masks(g.num_vertices, mode, seed)
    cross, order = _cut_matrix(g, masks)
    mult = {e: 0 for e in order}
    for e in edges:
        mult[e] += 1
    wvec = np.array([mult[e] for e in order], dtype=float)
    zvec = np.array([float(z.get(e, 0.0)) for e in order])
    hits = cross @ wvec
    weight = cross @ zvec
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(weight > 0, hits / np.where(weight > 0, weight, 1.0), np.where(hits > 0, np.inf, 0.0))
    k = int(np.argmax(ratio))
    verts = g.vertices
    worst = frozenset(verts[i] for i in range(len(verts)) if (int(masks[k]) >> i) & 1)
    return CutAudit(float(ratio[k]), float(weight.min()), int(len(masks)), worst)
