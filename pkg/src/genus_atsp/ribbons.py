"""Ribbon decompositions and the max-ribbon contraction sequence.

A ribbon is a maximal chain of parallel non-loop edges in which consecutive
edges bound a bigon face.  Repeatedly contracting the heaviest ribbon, and
remembering one weighted-median ("central") edge of each contracted ribbon,
yields a spanning forest whose cuts are controlled by the weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Real
from typing import Iterable, Mapping, Sequence

from genus_atsp.exceptions import (
    CutConditionViolated,
    DegenerateCut,
    EmptyRibbon,
    NoRibbons,
)
from genus_atsp.surface_graph import (
    ContractionMap,
    Embedding,
    FaceSet,
    contract,
    euler_characteristic,
    trace_faces,
)

MIN_RIBBON_WEIGHT = Fraction(2, 5)


@dataclass(frozen=True)
class Ribbon:
    edges: tuple[int, ...]
    endpoints: tuple[int, int]

    def __len__(self) -> int:
        return len(self.edges)

    def weight(self, z: Mapping[int, Real]) -> Real:
        return sum((z[e] for e in self.edges), 0)


@dataclass(frozen=True)
class RibbonDecomposition:
    ribbons: tuple[Ribbon, ...]
    ribbon_of: Mapping[int, int]

    def __len__(self) -> int:
        return len(self.ribbons)

    def __iter__(self):
        return iter(self.ribbons)


def _chain_order(members: list[int], links: dict[int, list[int]]) -> tuple[int, ...]:
    if len(members) == 1:
        return (members[0],)
    ends = sorted(e for e in members if len(set(links[e])) == 1)
    start = ends[0] if ends else min(members)
    order = [start]
    prev = None
    cur = start
    while True:
        nxt = sorted(w for w in set(links[cur]) if w != prev and w not in order)
        if not nxt:
            break
        prev, cur = cur, nxt[0]
        order.append(cur)
    if order[0] > order[-1]:
        order.reverse()
    return tuple(order)


def ribbon_decomposition(g: Embedding, faces: FaceSet | None = None) -> RibbonDecomposition:
    """Group the non-loop edges of ``g`` into maximal bigon chains."""
    faces = trace_faces(g) if faces is None else faces
    parent = {e: e for e in g.edge_ids if not g.is_loop(e)}

    def find(e: int) -> int:
        while parent[e] != e:
            parent[e] = parent[parent[e]]
            e = parent[e]
        return e

    links: dict[int, list[int]] = {e: [] for e in parent}
    for walk in faces.faces:
        if len(walk) != 2:
            continue
        (e1, _), (e2, _) = walk
        if e1 == e2 or e1 not in parent or e2 not in parent:
            continue
        links[e1].append(e2)
        links[e2].append(e1)
        r1, r2 = find(e1), find(e2)
        if r1 != r2:
            parent[max(r1, r2)] = min(r1, r2)
    classes: dict[int, list[int]] = {}
    for e in parent:
        classes.setdefault(find(e), []).append(e)
    ribbons = []
    for members in sorted(classes.values(), key=min):
        order = _chain_order(sorted(members), links)
        u, v = g.ends[order[0]]
        ribbons.append(Ribbon(order, (min(u, v), max(u, v))))
    ribbon_of = {e: k for k, r in enumerate(ribbons) for e in r.edges}
    return RibbonDecomposition(tuple(ribbons), ribbon_of)


def central_edges(ribbon: Ribbon, z: Mapping[int, Real]) -> tuple[int, ...]:
    """Weighted medians of the ribbon order.

    An edge is a median when the weight strictly before it and the weight
    strictly after it are both at most half the total.  When the ribbon has
    positive weight only positive-weight medians are returned (there are at
    most two); a weightless ribbon falls back to its positional middle.
    """
    if not ribbon.edges:
        raise EmptyRibbon("ribbon has no edges")
    w = [z[e] for e in ribbon.edges]
    if any(x < 0 for x in w):
        raise ValueError("ribbon weights must be nonnegative")
    total = sum(w, 0)
    k = len(w)
    if total == 0:
        mid = [(k - 1) // 2, k // 2]
        return tuple(sorted({ribbon.edges[i] for i in mid}))
    exact = all(isinstance(x, (int, Fraction)) for x in w)
    tol = 0 if exact else 1e-12 * float(total)
    half = total / 2
    out = []
    before = 0
    for i, x in enumerate(w):
        after = total - before - x
        if x > 0 and before <= half + tol and after <= half + tol:
            out.append(ribbon.edges[i])
        before += x
    return tuple(out)


def max_weight_ribbon(d: RibbonDecomposition, z: Mapping[int, Real]) -> Ribbon:
    if not d.ribbons:
        raise NoRibbons("decomposition is empty")
    return min(d.ribbons, key=lambda r: (-r.weight(z), min(r.edges)))


@dataclass(frozen=True)
class ContractionStep:
    index: int
    num_vertices: int
    chi: int
    num_ribbons: int
    ribbon: Ribbon
    weight: Real
    central_edge: int


@dataclass
class ContractionTrace:
    """The graphs ``G_0 .. G_t`` and what was contracted between them."""

    graphs: list[Embedding]
    steps: list[ContractionStep]
    maps: list[ContractionMap]
    final_ribbon_count: int
    violations: list[ContractionStep] = field(default_factory=list)

    @property
    def t(self) -> int:
        return len(self.steps)

    @property
    def terminal_vertices(self) -> int:
        return self.graphs[-1].num_vertices

    @property
    def composed_map(self) -> ContractionMap:
        cmap = ContractionMap.identity(self.graphs[0])
        for m in self.maps:
            cmap = cmap.then(m)
        return cmap

    def ribbon_counts(self) -> list[tuple[int, int, int]]:
        """``(|R_i|, |V_i|, chi)`` for every graph of the sequence."""
        rows = [(s.num_ribbons, s.num_vertices, s.chi) for s in self.steps]
        last = self.graphs[-1]
        rows.append((self.final_ribbon_count, last.num_vertices, euler_characteristic(last)))
        return rows

    def audit_lines(self) -> list[str]:
        return [
            f"step {s.index} {s.num_vertices} {len(s.ribbon)} {float(s.weight):.12g} {s.central_edge}"
            for s in self.steps
        ]


@dataclass(frozen=True)
class WeakThinForest:
    edges: frozenset[int]
    components: int
    component_of: Mapping[int, int]


def contraction_sequence(
    g: Embedding,
    z: Mapping[int, Real],
    target: int,
    *,
    strict: bool = True,
    tol: float = 1e-6,
) -> tuple[ContractionTrace, WeakThinForest]:
    """Contract heaviest ribbons until at most ``max(target, 1)`` vertices remain.

    ``z`` must cross every cut with weight at least 2; a contracted ribbon
    lighter than 2/5 raises :class:`CutConditionViolated` when ``strict``,
    otherwise the step is recorded in ``trace.violations``.
    """
    stop = max(int(target), 1)
    graphs = [g]
    steps: list[ContractionStep] = []
    maps: list[ContractionMap] = []
    violations: list[ContractionStep] = []
    forest: list[int] = []
    cur = g
    while True:
        faces = trace_faces(cur)
        d = ribbon_decomposition(cur, faces)
        if cur.num_vertices <= stop:
            break
        if not d.ribbons:
            raise NoRibbons(f"{cur.num_vertices} vertices but no non-loop edges")
        r = max_weight_ribbon(d, z)
        w = r.weight(z)
        e = min(central_edges(r, z))
        step = ContractionStep(
            len(steps),
            cur.num_vertices,
            cur.num_vertices - cur.num_edges + len(faces),
            len(d),
            r,
            w,
            e,
        )
        if w < MIN_RIBBON_WEIGHT - tol:
            if strict:
                raise CutConditionViolated(
                    f"step {step.index}: heaviest ribbon {r.edges} has weight {float(w):.6g} < 2/5"
                )
            violations.append(step)
        steps.append(step)
        forest.append(e)
        cur, cmap = contract(cur, r.edges)
        graphs.append(cur)
        maps.append(cmap)
    trace = ContractionTrace(graphs, steps, maps, len(d), violations)
    comp = trace.composed_map.vertex_map
    return trace, WeakThinForest(frozenset(forest), cur.num_vertices, dict(comp))


# --- cut instrumentation ----------------------------------------------------


def _check_cut(g: Embedding, u: Iterable[int]) -> frozenset[int]:
    side = frozenset(u)
    if not side or side >= set(g.vertices):
        raise DegenerateCut("cut side must be a proper nonempty vertex subset")
    return side


def cut_edges(g: Embedding, u: Iterable[int]) -> list[int]:
    side = _check_cut(g, u)
    return [e for e, (a, b) in g.ends.items() if (a in side) != (b in side)]


def cut_crossing(g: Embedding, t: Iterable[int], u: Iterable[int]) -> int:
    t = set(t)
    return sum(1 for e in cut_edges(g, u) if e in t)


def thinness_ratio(g: Embedding, t: Iterable[int], z: Mapping[int, Real], u: Iterable[int]):
    """``|T & delta(U)| / z(delta(U))``; infinite when an uncovered cut is crossed."""
    crossing = cut_edges(g, u)
    t = set(t)
    hits = sum(1 for e in crossing if e in t)
    weight = sum((z[e] for e in crossing), 0)
    if weight == 0:
        return 0 if hits == 0 else float("inf")
    return Fraction(hits) / weight if isinstance(weight, (int, Fraction)) else hits / weight


def is_spanning_forest(g: Embedding, edges: Sequence[int]) -> tuple[bool, int]:
    """Acyclicity check by union-find; returns ``(acyclic, components)``."""
    parent = {v: v for v in g.vertices}

    def find(v: int) -> int:
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    comps = len(parent)
    for e in edges:
        a, b = (find(x) for x in g.ends[e])
        if a == b:
            return False, comps
        parent[a] = b
        comps -= 1
    return True, comps
