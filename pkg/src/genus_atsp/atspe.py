"""ATSPE-1 instance files.

A line-oriented text format; ``#`` starts a comment and sections may come in
any order::

    atspe 1
    vertices 3
    arc 0 0 1 1
    arc 1 1 0 1
    edge 0 0 1          # forward arc (end 0 -> end 1), backward arc
    edge 1 2 -          # '-' marks a missing direction
    rot 0 0.0 2.1       # cyclic order of edge-ends <edge>.<0|1>
    sig 2 -1            # default signature is +1

The writer emits a canonical form, so ``write_atspe(parse_atspe(text))`` is a
fixed point after one round trip.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from genus_atsp.exceptions import InstanceFormatError, MalformedRotation

HEADER = ("atspe", "1")


@dataclass
class RawInstance:
    num_vertices: int
    arcs: dict[int, tuple[int, int, float]] = field(default_factory=dict)
    edges: dict[int, tuple[int | None, int | None]] = field(default_factory=dict)
    rotation: dict[int, list[tuple[int, int]]] = field(default_factory=dict)
    signature: dict[int, int] = field(default_factory=dict)


def _int(tok: str, lineno: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise InstanceFormatError(f"line {lineno}: expected integer, got {tok!r}") from None


def _end(tok: str, lineno: int) -> tuple[int, int]:
    e, dot, side = tok.partition(".")
    if not dot or side not in ("0", "1"):
        raise MalformedRotation(f"line {lineno}: bad edge-end {tok!r}")
    return _int(e, lineno), int(side)


def parse_atspe(text: str) -> RawInstance:
    header_seen = False
    raw: RawInstance | None = None
    n = None
    pending: list[tuple[int, list[str]]] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        tokens = line.split("#", 1)[0].split()
        if not tokens:
            continue
        if not header_seen:
            if tuple(tokens) != HEADER:
                raise InstanceFormatError(f"line {lineno}: expected header 'atspe 1'")
            header_seen = True
            continue
        if tokens[0] == "vertices":
            if len(tokens) != 2 or n is not None:
                raise InstanceFormatError(f"line {lineno}: bad or repeated vertices line")
            n = _int(tokens[1], lineno)
            if n < 0:
                raise InstanceFormatError(f"line {lineno}: negative vertex count")
            continue
        pending.append((lineno, tokens))
    if not header_seen:
        raise InstanceFormatError("empty instance")
    if n is None:
        raise InstanceFormatError("missing 'vertices <n>' line")
    raw = RawInstance(n)
    for lineno, tokens in pending:
        kind, args = tokens[0], tokens[1:]
        if kind == "arc":
            if len(args) != 4:
                raise InstanceFormatError(f"line {lineno}: arc needs <id> <tail> <head> <cost>")
            aid, tail, head = (_int(t, lineno) for t in args[:3])
            try:
                cost = float(args[3])
            except ValueError:
                raise InstanceFormatError(f"line {lineno}: bad cost {args[3]!r}") from None
            if aid in raw.arcs:
                raise InstanceFormatError(f"line {lineno}: duplicate arc id {aid}")
            for v in (tail, head):
                if not 0 <= v < n:
                    raise InstanceFormatError(f"line {lineno}: vertex {v} out of range")
            raw.arcs[aid] = (tail, head, cost)
        elif kind == "edge":
            if len(args) != 3:
                raise InstanceFormatError(f"line {lineno}: edge needs <id> <arc|-> <arc|->")
            eid = _int(args[0], lineno)
            if eid in raw.edges:
                raise InstanceFormatError(f"line {lineno}: duplicate edge id {eid}")
            slots = tuple(None if t == "-" else _int(t, lineno) for t in args[1:])
            raw.edges[eid] = slots  # type: ignore[assignment]
        elif kind == "rot":
            if not args:
                raise InstanceFormatError(f"line {lineno}: rot needs a vertex")
            v = _int(args[0], lineno)
            if v in raw.rotation:
                raise MalformedRotation(f"line {lineno}: second rotation for vertex {v}")
            raw.rotation[v] = [_end(t, lineno) for t in args[1:]]
        elif kind == "sig":
            if len(args) != 2 or args[1] not in ("+1", "-1", "1"):
                raise InstanceFormatError(f"line {lineno}: sig needs <edge> <+1|-1>")
            raw.signature[_int(args[0], lineno)] = int(args[1])
        else:
            raise InstanceFormatError(f"line {lineno}: unknown record {kind!r}")
    return raw


def format_cost(c: float) -> str:
    c = float(c)
    return str(int(c)) if c.is_integer() and abs(c) < 2**53 else repr(c)


def write_atspe(g) -> str:
    """Canonical ATSPE-1 text for an EmbeddedDigraph or RawInstance."""
    from genus_atsp.surface_graph import EmbeddedDigraph

    if isinstance(g, EmbeddedDigraph):
        raw = RawInstance(
            g.n,
            {a: (arc.tail, arc.head, arc.cost) for a, arc in g.arcs.items()},
            dict(g.edge_arcs),
            {v: list(seq) for v, seq in g.embedding.rotation.items()},
            dict(g.embedding.signature),
        )
    else:
        raw = g
    lines = ["atspe 1", f"vertices {raw.num_vertices}"]
    for a in sorted(raw.arcs):
        tail, head, cost = raw.arcs[a]
        lines.append(f"arc {a} {tail} {head} {format_cost(cost)}")
    for e in sorted(raw.edges):
        slots = " ".join("-" if a is None else str(a) for a in raw.edges[e])
        lines.append(f"edge {e} {slots}")
    for v in sorted(raw.rotation):
        ends = " ".join(f"{e}.{i}" for e, i in raw.rotation[v])
        lines.append(f"rot {v} {ends}".rstrip())
    for e in sorted(raw.signature):
        if raw.signature[e] == -1:
            lines.append(f"sig {e} -1")
    return "\n".join(lines) + "\n"


def read_instance(path):
    from genus_atsp.surface_graph import build_embedding

    with open(path, encoding="utf-8") as fh:
        return build_embedding(fh.read())
