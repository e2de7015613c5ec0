"""Exception hierarchy.

Every pipeline failure derives from :class:`GenusATSPError`; ``stage`` is set
by :func:`genus_atsp.tour.solve` when an error escapes a pipeline stage.
"""

from __future__ import annotations


class GenusATSPError(Exception):
    stage: str | None = None


# --- instances / embeddings -------------------------------------------------


class InstanceFormatError(GenusATSPError, ValueError):
    """Unparseable or structurally inconsistent ATSPE-1 text."""


class MalformedRotation(GenusATSPError, ValueError):
    """An edge-end is missing from, or duplicated in, the rotation system."""


class NotStronglyConnected(GenusATSPError, ValueError):
    pass


class NegativeCost(GenusATSPError, ValueError):
    pass


class ContractLoop(GenusATSPError, ValueError):
    pass


# --- ribbons / forests ------------------------------------------------------


class EmptyRibbon(GenusATSPError, ValueError):
    pass


class NoRibbons(GenusATSPError, RuntimeError):
    pass


class CutConditionViolated(GenusATSPError, RuntimeError):
    """A contracted ribbon carried less than 2/5 weight.

    This means the weights handed to the contraction sequence do not cross
    every cut with total weight at least 2.
    """


class DegenerateCut(GenusATSPError, ValueError):
    pass


class NegativeWeight(GenusATSPError, ValueError):
    pass


class InvariantBroken(GenusATSPError, RuntimeError):
    pass


# --- LP ---------------------------------------------------------------------


class LpInfeasible(GenusATSPError, RuntimeError):
    pass


class LpUnbounded(GenusATSPError, RuntimeError):
    pass


class SolverStall(GenusATSPError, RuntimeError):
    pass


# --- circulation / tour -----------------------------------------------------


class MissingArc(GenusATSPError, ValueError):
    pass


class InfeasibleCirculation(GenusATSPError, RuntimeError):
    def __init__(self, message: str, cut: frozenset | None = None):
        super().__init__(message)
        self.cut = cut


class NotEulerian(GenusATSPError, RuntimeError):
    pass


class TooManyComponents(GenusATSPError, ValueError):
    pass


class TooLarge(GenusATSPError, ValueError):
    pass


class CertificateError(GenusATSPError, RuntimeError):
    """A numerically audited guarantee did not hold."""
