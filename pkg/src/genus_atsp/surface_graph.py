"""Embedded multigraphs: signed rotation systems, faces, duals and contraction.

An embedding is stored the usual way, as a cyclic order of edge-ends around
every vertex plus a ``+1``/``-1`` signature on every edge.  An edge-end is the
pair ``(edge_id, side)`` with ``side`` in ``{0, 1}``.

All topological computations go through the *flag* representation: every
edge-end carries two flags (one on each side of the edge), and three
fixed-point-free involutions act on the ``4|E|`` flags::

    a0  walk along the edge to the other end, staying on the same side
    a1  turn around the vertex to the neighbouring edge-end
    a2  switch to the other side of the edge at the same end

Faces are the orbits of ``<a0, a1>``, vertices the orbits of ``<a1, a2>``.
The dual map is obtained by swapping ``a0`` and ``a2``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from genus_atsp.exceptions import (
    ContractLoop,
    InstanceFormatError,
    MalformedRotation,
    NegativeCost,
    NotStronglyConnected,
)

End = tuple[int, int]


def _flag(edge_index: int, end: int, side: int) -> int:
    return 4 * edge_index + 2 * end + side


@dataclass(frozen=True)
class FlagMap:
    """Flag-level encoding of an embedded graph (a generalized map)."""

    a0: tuple[int, ...]
    a1: tuple[int, ...]
    a2: tuple[int, ...]
    edge_of: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.a0)

    def orbits(self, first: Sequence[int], second: Sequence[int]) -> list[list[int]]:
        """Orbits of the group generated by two involutions.

        Each orbit is listed as the alternating walk ``f, first(f),
        second(first(f)), ...`` starting from its smallest flag.
        """
        seen = [False] * len(first)
        out = []
        for start in range(len(first)):
            if seen[start]:
                continue
            orbit = []
            f = start
            while True:
                g = first[f]
                orbit.append(f)
                orbit.append(g)
                seen[f] = seen[g] = True
                f = second[g]
                if f == start:
                    break
            out.append(orbit)
        return out

    def dual(self) -> "FlagMap":
        return FlagMap(self.a2, self.a1, self.a0, self.edge_of)

    def orbit_sizes(self, first: Sequence[int], second: Sequence[int]) -> list[int]:
        size = [0] * len(self)
        for orbit in self.orbits(first, second):
            for f in orbit:
                size[f] = len(orbit)
        return size


@dataclass(frozen=True)
class Embedding:
    """Undirected multigraph with a signed rotation system.

    ``ends[e] = (u, v)`` gives the vertices carrying end 0 and end 1 of edge
    ``e``.  ``rotation[v]`` is the cyclic order of edge-ends at ``v`` and
    ``signature[e]`` is ``+1`` or ``-1``.  Build instances with
    :meth:`from_rotation`, which validates the rotation system.
    """

    vertices: tuple[int, ...]
    ends: Mapping[int, tuple[int, int]]
    rotation: Mapping[int, tuple[End, ...]]
    signature: Mapping[int, int]

    @classmethod
    def from_rotation(
        cls,
        rotation: Mapping[int, Iterable[End]],
        signature: Mapping[int, int] | None = None,
        vertices: Iterable[int] | None = None,
        edges: Iterable[int] | None = None,
    ) -> "Embedding":
        signature = dict(signature or {})
        verts = set(rotation) if vertices is None else set(vertices)
        unknown = set(rotation) - verts
        if unknown:
            raise MalformedRotation(f"rotation given for unknown vertices {sorted(unknown)}")
        where: dict[End, int] = {}
        rot: dict[int, tuple[End, ...]] = {}
        for v in sorted(verts):
            seq = tuple((int(e), int(i)) for e, i in rotation.get(v, ()))
            for end in seq:
                if end[1] not in (0, 1):
                    raise MalformedRotation(f"edge-end {end} has side outside {{0, 1}}")
                if end in where:
                    raise MalformedRotation(f"edge-end {end[0]}.{end[1]} appears more than once")
                where[end] = v
            rot[v] = seq
        edge_ids = {e for e, _ in where} if edges is None else set(edges)
        ends: dict[int, tuple[int, int]] = {}
        for e in sorted(edge_ids):
            missing = [i for i in (0, 1) if (e, i) not in where]
            if missing:
                raise MalformedRotation(f"edge-end {e}.{missing[0]} missing from every rotation")
            ends[e] = (where[(e, 0)], where[(e, 1)])
        stray = {e for e, _ in where} - edge_ids
        if stray:
            raise MalformedRotation(f"rotation mentions undeclared edges {sorted(stray)}")
        sig = {}
        for e in ends:
            s = int(signature.get(e, 1))
            if s not in (1, -1):
                raise MalformedRotation(f"signature of edge {e} must be +1 or -1, got {s}")
            sig[e] = s
        extra = set(signature) - set(ends)
        if extra:
            raise MalformedRotation(f"signature given for unknown edges {sorted(extra)}")
        return cls(tuple(sorted(verts)), ends, rot, sig)

    # -- basic queries ---------------------------------------------------

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_edges(self) -> int:
        return len(self.ends)

    @cached_property
    def edge_ids(self) -> tuple[int, ...]:
        return tuple(sorted(self.ends))

    @cached_property
    def edge_index(self) -> dict[int, int]:
        return {e: k for k, e in enumerate(self.edge_ids)}

    def is_loop(self, e: int) -> bool:
        u, v = self.ends[e]
        return u == v

    def degree(self, v: int) -> int:
        return len(self.rotation[v])

    def is_connected(self) -> bool:
        if not self.vertices:
            return True
        adj: dict[int, set[int]] = {v: set() for v in self.vertices}
        for u, v in self.ends.values():
            adj[u].add(v)
            adj[v].add(u)
        start = self.vertices[0]
        seen = {start}
        stack = [start]
        while stack:
            for w in adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == len(self.vertices)

    # -- flags -----------------------------------------------------------

    @cached_property
    def flags(self) -> FlagMap:
        idx = self.edge_index
        size = 4 * len(idx)
        a0 = [0] * size
        a1 = [0] * size
        a2 = [0] * size
        edge_of = [0] * size
        for e, k in idx.items():
            for end in (0, 1):
                for side in (0, 1):
                    f = _flag(k, end, side)
                    edge_of[f] = e
                    a2[f] = _flag(k, end, 1 - side)
                    if self.signature[e] == 1:
                        a0[f] = _flag(k, 1 - end, 1 - side)
                    else:
                        a0[f] = _flag(k, 1 - end, side)
        for seq in self.rotation.values():
            d = len(seq)
            for j, (e, i) in enumerate(seq):
                e2, i2 = seq[(j + 1) % d]
                f = _flag(idx[e], i, 1)
                g = _flag(idx[e2], i2, 0)
                a1[f] = g
                a1[g] = f
        return FlagMap(tuple(a0), tuple(a1), tuple(a2), tuple(edge_of))

    def flag(self, e: int, end: int, side: int) -> int:
        return _flag(self.edge_index[e], end, side)

    def end_of_flag(self, f: int) -> End:
        return (self.edge_ids[f // 4], (f // 2) % 2)


def embedding_from_flags(fm: FlagMap) -> Embedding:
    """Read a signed rotation system back out of a flag map.

    Vertices are numbered ``0, 1, ...`` by the smallest flag of their
    ``<a1, a2>`` orbit; edges keep the labels in ``fm.edge_of``.  Local
    orientations are chosen canonically, so the result is equal to the
    source embedding only up to vertex flips.
    """
    end_of: dict[int, End] = {}
    by_edge: dict[int, list[int]] = {}
    for f, e in enumerate(fm.edge_of):
        by_edge.setdefault(e, []).append(f)
    for e, fl in by_edge.items():
        first = min(fl)
        end0 = {first, fm.a2[first]}
        for f in fl:
            end_of[f] = (e, 0 if f in end0 else 1)
    rotation: dict[int, tuple[End, ...]] = {}
    side0: dict[End, int] = {}
    side1: dict[End, int] = {}
    for v, orbit in enumerate(fm.orbits(fm.a2, fm.a1)):
        # orbit alternates: entering flag, its a2 partner, next end, ...
        seq = []
        for j in range(0, len(orbit), 2):
            enter, leave = orbit[j], orbit[j + 1]
            h = end_of[enter]
            seq.append(h)
            side0[h] = enter
            side1[h] = leave
        rotation[v] = tuple(seq)
    signature = {}
    for e in by_edge:
        h0, h1 = (e, 0), (e, 1)
        signature[e] = 1 if fm.a0[side1[h0]] == side0[h1] else -1
    return orient_tree_edges(Embedding.from_rotation(rotation, signature))


def flip_vertex(g: Embedding, v: int) -> Embedding:
    """Reverse the local orientation at ``v``; the embedding is unchanged."""
    rot = dict(g.rotation)
    rot[v] = tuple(reversed(rot[v]))
    sig = dict(g.signature)
    for e, _ in g.rotation[v]:
        if not g.is_loop(e):
            sig[e] = -g.signature[e]
    return Embedding(g.vertices, g.ends, rot, sig)


def orient_tree_edges(g: Embedding) -> Embedding:
    """Flip vertices so a BFS spanning tree carries signature +1.

    Orientable embeddings come out with every signature +1.
    """
    rot = {v: list(seq) for v, seq in g.rotation.items()}
    sig = dict(g.signature)
    seen: set[int] = set()
    for root in g.vertices:
        if root in seen:
            continue
        seen.add(root)
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for e, i in list(rot[u]):
                w = g.ends[e][1 - i]
                if w in seen:
                    continue
                seen.add(w)
                if sig[e] == -1:
                    rot[w].reverse()
                    for f, _ in rot[w]:
                        if not g.is_loop(f):
                            sig[f] = -sig[f]
                queue.append(w)
    return Embedding(g.vertices, g.ends, {v: tuple(s) for v, s in rot.items()}, sig)


def maps_isomorphic(a: FlagMap, b: FlagMap) -> bool:
    """Isomorphism of connected flag maps (relabeling of flags)."""
    n = len(a)
    if n != len(b):
        return False
    if n == 0:
        return True

    def invariants(m: FlagMap) -> list[tuple[int, int, int]]:
        return list(
            zip(m.orbit_sizes(m.a1, m.a2), m.orbit_sizes(m.a0, m.a1), m.orbit_sizes(m.a0, m.a2))
        )

    inv_a, inv_b = invariants(a), invariants(b)
    if sorted(inv_a) != sorted(inv_b):
        return False
    ops_a = (a.a0, a.a1, a.a2)
    ops_b = (b.a0, b.a1, b.a2)
    for cand in range(n):
        if inv_b[cand] != inv_a[0]:
            continue
        phi = [-1] * n
        used = [False] * n
        phi[0] = cand
        used[cand] = True
        queue = deque([0])
        ok = True
        while queue and ok:
            f = queue.popleft()
            for oa, ob in zip(ops_a, ops_b):
                g, h = oa[f], ob[phi[f]]
                if phi[g] == -1:
                    if used[h]:
                        ok = False
                        break
                    phi[g] = h
                    used[h] = True
                    queue.append(g)
                elif phi[g] != h:
                    ok = False
                    break
        if ok and all(p >= 0 for p in phi):
            return True
    return False


def embeddings_isomorphic(g: Embedding, h: Embedding) -> bool:
    if g.num_vertices != h.num_vertices or g.num_edges != h.num_edges:
        return False
    return maps_isomorphic(g.flags, h.flags)


# --- faces and Euler genus --------------------------------------------------


@dataclass(frozen=True)
class FaceSet:
    """Face boundary walks.

    ``faces[k]`` is the boundary walk of face ``k`` as a sequence of edge
    traversals ``(edge_id, from_end)``.  ``face_of_flag`` maps every flag of
    the embedding to its face.
    """

    faces: tuple[tuple[End, ...], ...]
    face_of_flag: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.faces)

    @property
    def sizes(self) -> list[int]:
        return [len(f) for f in self.faces]

    def is_bigon(self, k: int) -> bool:
        walk = self.faces[k]
        return len(walk) == 2 and walk[0][0] != walk[1][0]


def trace_faces(g: Embedding) -> FaceSet:
    fm = g.flags
    face_of = [-1] * len(fm)
    faces = []
    for start in range(len(fm)):
        if face_of[start] >= 0:
            continue
        k = len(faces)
        walk = []
        f = start
        while True:
            walk.append(g.end_of_flag(f))
            h = fm.a0[f]
            face_of[f] = face_of[h] = k
            f = fm.a1[h]
            if f == start:
                break
        faces.append(tuple(walk))
    return FaceSet(tuple(faces), tuple(face_of))


def euler_characteristic(g: Embedding, faces: FaceSet | None = None) -> int:
    faces = trace_faces(g) if faces is None else faces
    # an edgeless vertex sits on a sphere with one face
    f = len(faces) if g.num_edges else g.num_vertices
    return g.num_vertices - g.num_edges + f


def euler_genus(g: Embedding, faces: FaceSet | None = None) -> int:
    """Euler genus of the surface the rotation system cellularly embeds into.

    Only meaningful for connected graphs; the value is ``2 - chi``.
    """
    return 2 - euler_characteristic(g, faces)


# --- duality ----------------------------------------------------------------


@dataclass(frozen=True)
class DualGraph:
    """Dual of an embedded graph.

    Dual vertex ``k`` is face ``k`` of the primal; dual edge ``e`` crosses
    primal edge ``e``.
    """

    embedding: Embedding
    primal_faces: FaceSet

    def degree(self, face: int) -> int:
        return self.embedding.degree(face)


def dual_graph(g: Embedding, faces: FaceSet | None = None) -> DualGraph:
    faces = trace_faces(g) if faces is None else faces
    if not g.num_edges:
        return DualGraph(Embedding.from_rotation({}, vertices=range(g.num_vertices)), faces)
    dual = embedding_from_flags(g.flags.dual())
    return DualGraph(dual, faces)


# --- contraction ------------------------------------------------------------

KEPT = "kept"
CONTRACTED = "contracted"
BECAME_LOOP = "loop"


@dataclass(frozen=True)
class ContractionMap:
    vertex_map: Mapping[int, int]
    edge_fate: Mapping[int, str]

    @classmethod
    def identity(cls, g: Embedding) -> "ContractionMap":
        fate = {e: (BECAME_LOOP if g.is_loop(e) else KEPT) for e in g.ends}
        return cls({v: v for v in g.vertices}, fate)

    def then(self, later: "ContractionMap") -> "ContractionMap":
        vmap = {v: later.vertex_map[w] for v, w in self.vertex_map.items()}
        fate = {}
        for e, f in self.edge_fate.items():
            if f == CONTRACTED:
                fate[e] = f
            else:
                g = later.edge_fate[e]
                fate[e] = BECAME_LOOP if (f == BECAME_LOOP and g == KEPT) else g
        return ContractionMap(vmap, fate)


def contract(g: Embedding, edges: Iterable[int]) -> tuple[Embedding, ContractionMap]:
    """Contract ``edges`` while preserving the embedding.

    Edges are processed in increasing id order.  A non-loop edge is
    contracted by splicing the two rotations at its ends (flipping the far
    vertex first if the edge has signature -1).  An edge of ``edges`` that has
    already become a loop, because an earlier edge merged its endpoints, is
    deleted; for a ribbon those loops bound length-one faces, so the surface
    is unchanged.  Parallel edges and loops outside ``edges`` are kept.
    """
    s = sorted(set(edges))
    for e in s:
        if e not in g.ends:
            raise KeyError(f"edge {e} not in graph")
        if g.is_loop(e):
            raise ContractLoop(f"edge {e} is a self-loop")
    rot = {v: list(seq) for v, seq in g.rotation.items()}
    endv = {e: list(uv) for e, uv in g.ends.items()}
    sig = dict(g.signature)
    vmap = {v: v for v in g.vertices}
    for e in s:
        u, v = endv[e]
        if u == v:
            rot[u].remove((e, 0))
            rot[u].remove((e, 1))
            del endv[e], sig[e]
            continue
        a, b = (u, v) if u < v else (v, u)
        ha = (e, 0) if endv[e][0] == a else (e, 1)
        hb = (e, 1 - ha[1])
        if sig[e] == -1:
            rot[b].reverse()
            for f, _ in rot[b]:
                if endv[f][0] != endv[f][1]:
                    sig[f] = -sig[f]
        ra, rb = rot[a], rot[b]
        ia, ib = ra.index(ha), rb.index(hb)
        merged = ra[ia + 1 :] + ra[:ia] + rb[ib + 1 :] + rb[:ib]
        for f, i in rb:
            endv[f][i] = a
        rot[a] = merged
        del rot[b], endv[e], sig[e]
        for w, t in vmap.items():
            if t == b:
                vmap[w] = a
    fate = {}
    for e in g.ends:
        if e in endv:
            fate[e] = BECAME_LOOP if endv[e][0] == endv[e][1] else KEPT
        else:
            fate[e] = CONTRACTED
    new = Embedding(
        tuple(sorted(rot)),
        {e: (uv[0], uv[1]) for e, uv in sorted(endv.items())},
        {v: tuple(seq) for v, seq in sorted(rot.items())},
        dict(sorted(sig.items())),
    )
    return new, ContractionMap(vmap, fate)


# --- directed instances -----------------------------------------------------


@dataclass(frozen=True)
class Arc:
    id: int
    tail: int
    head: int
    cost: float


@dataclass(frozen=True)
class EmbeddedDigraph:
    """ATSP instance: arcs with costs sitting on the edges of an embedding.

    ``edge_arcs[e] = (forward, backward)`` where ``forward`` runs from the
    vertex of end 0 to the vertex of end 1 and ``backward`` the other way;
    either may be ``None``.
    """

    embedding: Embedding
    arcs: Mapping[int, Arc]
    edge_arcs: Mapping[int, tuple[int | None, int | None]]

    @property
    def vertices(self) -> tuple[int, ...]:
        return self.embedding.vertices

    @property
    def n(self) -> int:
        return self.embedding.num_vertices

    @cached_property
    def arc_ids(self) -> tuple[int, ...]:
        return tuple(sorted(self.arcs))

    @cached_property
    def edge_of_arc(self) -> dict[int, int]:
        out = {}
        for e, pair in self.edge_arcs.items():
            for a in pair:
                if a is not None:
                    out[a] = e
        return out

    def edge_cost(self, e: int) -> float:
        """Undirected edge cost: the cheaper of its arcs."""
        return min(self.arcs[a].cost for a in self.edge_arcs[e] if a is not None)

    def cost_of(self, arcs: Iterable[int]) -> float:
        return sum(self.arcs[a].cost for a in arcs)

    def out_arcs(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {v: [] for v in self.vertices}
        for a in self.arc_ids:
            out[self.arcs[a].tail].append(a)
        return out

    def with_costs(self, costs: Mapping[int, float]) -> "EmbeddedDigraph":
        arcs = {a: Arc(a, arc.tail, arc.head, float(costs[a])) for a, arc in self.arcs.items()}
        return EmbeddedDigraph(self.embedding, arcs, self.edge_arcs)

    def is_strongly_connected(self) -> bool:
        if self.n <= 1:
            return True
        fwd: dict[int, list[int]] = {v: [] for v in self.vertices}
        bwd: dict[int, list[int]] = {v: [] for v in self.vertices}
        for arc in self.arcs.values():
            fwd[arc.tail].append(arc.head)
            bwd[arc.head].append(arc.tail)
        root = self.vertices[0]
        for adj in (fwd, bwd):
            seen = {root}
            stack = [root]
            while stack:
                for w in adj[stack.pop()]:
                    if w not in seen:
                        seen.add(w)
                        stack.append(w)
            if len(seen) != self.n:
                return False
        return True


def build_embedding(raw) -> EmbeddedDigraph:
    """Validate a parsed instance (or ATSPE-1 text) into an EmbeddedDigraph."""
    from genus_atsp.atspe import RawInstance, parse_atspe

    if isinstance(raw, str):
        raw = parse_atspe(raw)
    if not isinstance(raw, RawInstance):
        raise TypeError(f"expected RawInstance or str, got {type(raw).__name__}")
    vertices = range(raw.num_vertices)
    for v in raw.rotation:
        if not 0 <= v < raw.num_vertices:
            raise InstanceFormatError(f"rotation for vertex {v} outside 0..{raw.num_vertices - 1}")
    emb = Embedding.from_rotation(raw.rotation, raw.signature, vertices=vertices, edges=raw.edges)
    arcs = {}
    for aid, (tail, head, cost) in raw.arcs.items():
        if cost != cost or cost in (float("inf"), float("-inf")):
            raise InstanceFormatError(f"arc {aid} has non-finite cost")
        if cost < 0:
            raise NegativeCost(f"arc {aid} has negative cost {cost}")
        arcs[aid] = Arc(aid, tail, head, float(cost))
    owner: dict[int, int] = {}
    for e, pair in raw.edges.items():
        u, v = emb.ends[e]
        if u == v:
            raise InstanceFormatError(f"edge {e} is a self-loop")
        if pair == (None, None):
            raise InstanceFormatError(f"edge {e} carries no arc")
        for slot, a in enumerate(pair):
            if a is None:
                continue
            if a not in arcs:
                raise InstanceFormatError(f"edge {e} references unknown arc {a}")
            if a in owner:
                raise InstanceFormatError(f"arc {a} bound to edges {owner[a]} and {e}")
            owner[a] = e
            want = (u, v) if slot == 0 else (v, u)
            if (arcs[a].tail, arcs[a].head) != want:
                raise InstanceFormatError(
                    f"arc {a} runs {arcs[a].tail}->{arcs[a].head} but edge {e} slot {slot} "
                    f"expects {want[0]}->{want[1]}"
                )
    unbound = set(arcs) - set(owner)
    if unbound:
        raise InstanceFormatError(f"arcs {sorted(unbound)} are not bound to any edge")
    g = EmbeddedDigraph(emb, dict(sorted(arcs.items())), dict(sorted(raw.edges.items())))
    if not emb.is_connected() or not g.is_strongly_connected():
        raise NotStronglyConnected("instance digraph is not strongly connected")
    return g


def contract_edges(g, edges: Iterable[int]):
    """Contract ``edges`` in an Embedding or EmbeddedDigraph.

    For a digraph, arcs on contracted edges disappear and the remaining arcs
    are re-attached to the merged vertices.  The result is not re-validated:
    contracted digraphs may carry loop arcs.
    """
    if isinstance(g, Embedding):
        return contract(g, edges)
    emb, cmap = contract(g.embedding, edges)
    vm = cmap.vertex_map
    arcs = {}
    edge_arcs = {}
    for e, pair in g.edge_arcs.items():
        if cmap.edge_fate[e] == CONTRACTED:
            continue
        edge_arcs[e] = pair
        for a in pair:
            if a is not None:
                arc = g.arcs[a]
                arcs[a] = Arc(a, vm[arc.tail], vm[arc.head], arc.cost)
    return EmbeddedDigraph(emb, dict(sorted(arcs.items())), edge_arcs), cmap
