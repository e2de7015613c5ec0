"""Constant-factor ATSP for digraphs embedded on a surface of bounded genus."""

from genus_atsp.atspe import parse_atspe, read_instance, write_atspe
from genus_atsp.circulation import walk_cover
from genus_atsp.exceptions import GenusATSPError
from genus_atsp.harness import GenSpec, audit_cuts, brute_force_atsp, generate
from genus_atsp.heldkarp_lp import normalize_metric, solve_held_karp, symmetrize
from genus_atsp.ribbons import contraction_sequence, ribbon_decomposition
from genus_atsp.surface_graph import (
    EmbeddedDigraph,
    Embedding,
    build_embedding,
    contract,
    dual_graph,
    euler_genus,
    trace_faces,
)
from genus_atsp.thin_forest import compute_thin_forest
from genus_atsp.tour import SolverConfig, Tour, exact_atsp_dp, solve
from genus_atsp.validation import check_instance

__version__ = "0.1.0"

_ESTIMATORS = ("GenusATSPSolver", "HeldKarpLP", "ThinForestBuilder")


def __getattr__(name):
    # scikit-learn is slow to import; load the estimators on first use
    if name in _ESTIMATORS:
        from genus_atsp import estimators

        return getattr(estimators, name)
    raise AttributeError(f"module 'genus_atsp' has no attribute {name!r}")


__all__ = [
    "EmbeddedDigraph",
    "Embedding",
    "GenSpec",
    "GenusATSPError",
    "GenusATSPSolver",
    "HeldKarpLP",
    "SolverConfig",
    "ThinForestBuilder",
    "Tour",
    "audit_cuts",
    "brute_force_atsp",
    "build_embedding",
    "check_instance",
    "compute_thin_forest",
    "contract",
    "contraction_sequence",
    "dual_graph",
    "euler_genus",
    "exact_atsp_dp",
    "generate",
    "normalize_metric",
    "parse_atspe",
    "read_instance",
    "ribbon_decomposition",
    "solve",
    "solve_held_karp",
    "symmetrize",
    "trace_faces",
    "walk_cover",
    "write_atspe",
]
