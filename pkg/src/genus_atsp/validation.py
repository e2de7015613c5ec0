"""Input checks shared by the estimators and the CLI."""

from __future__ import annotations

import os
from pathlib import Path

from genus_atsp.atspe import RawInstance, parse_atspe
from genus_atsp.surface_graph import EmbeddedDigraph, build_embedding

_THIN_AUDIT_MODES = ("off", "exhaustive")


def check_instance(obj) -> EmbeddedDigraph:
    """Coerce a path, ATSPE-1 text, parsed instance or digraph to an EmbeddedDigraph."""
    if isinstance(obj, EmbeddedDigraph):
        return obj
    if isinstance(obj, RawInstance):
        return build_embedding(obj)
    if isinstance(obj, Path):
        return build_embedding(parse_atspe(obj.read_text()))
    if isinstance(obj, str):
        if obj.lstrip().startswith("atspe") or "\n" in obj:
            return build_embedding(parse_atspe(obj))
        if os.path.exists(obj):
            return build_embedding(parse_atspe(Path(obj).read_text()))
        raise FileNotFoundError(obj)
    raise TypeError(f"cannot interpret {type(obj).__name__} as an instance")


def check_thin_audit(mode: str) -> str:
    if mode in _THIN_AUDIT_MODES:
        return mode
    if mode.startswith("sample:"):
        try:
            k = int(mode.split(":", 1)[1])
        except ValueError:
            k = -1
        if k > 0:
            return mode
    raise ValueError(f"thin audit mode must be off, exhaustive or sample:<k>, got {mode!r}")


def check_positive_int(value, name: str, allow_none: bool = False):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, int) or value <= 0:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return value


def check_tolerance(value, name: str = "tol") -> float:
    value = float(value)
    if not 0 < value < 1:
        raise ValueError(f"{name} must lie in (0, 1), got {value}")
    return value
