"""scikit-learn style wrappers around the pipeline stages.

``fit`` takes one instance (path, ATSPE-1 text or EmbeddedDigraph); the
learned attributes end in an underscore as usual.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from genus_atsp.heldkarp_lp import normalize_metric, solve_held_karp, symmetrize
from genus_atsp.surface_graph import euler_genus
from genus_atsp.thin_forest import ALPHA, compute_thin_forest
from genus_atsp.tour import DP_CAP, SolverConfig, general_atsp_hook, solve
from genus_atsp.validation import check_instance, check_positive_int, check_thin_audit, check_tolerance


class HeldKarpLP(TransformerMixin, BaseEstimator):
    """Solve the cut LP; ``transform`` returns the symmetrized edge weights.

    The weights belong to the fitted instance; ``X`` is accepted for
    pipeline compatibility only.
    """

    def __init__(self, tol=1e-6, max_rounds=None, backend="simplex"):
        self.tol = tol
        self.max_rounds = max_rounds
        self.backend = backend

    def fit(self, X, y=None):
        g = normalize_metric(check_instance(X))
        sol = solve_held_karp(
            g,
            tol=check_tolerance(self.tol),
            max_rounds=check_positive_int(self.max_rounds, "max_rounds", allow_none=True),
            backend=self.backend,
        )
        self.graph_ = g
        self.solution_ = sol
        self.x_ = sol.x
        self.objective_ = sol.objective
        self.z_ = symmetrize(g, sol.x)
        return self

    def transform(self, X):
        check_is_fitted(self, "z_")
        return dict(self.z_)


class ThinForestBuilder(BaseEstimator):
    def __init__(self, alpha=ALPHA, audit="off", seed=0, lp_tol=1e-6):
        self.alpha = alpha
        self.audit = audit
        self.seed = seed
        self.lp_tol = lp_tol

    def fit(self, X, y=None):
        lp = HeldKarpLP(tol=self.lp_tol).fit(X)
        g = lp.graph_
        self.lp_ = lp
        self.forest_ = compute_thin_forest(
            g, lp.x_, lp.z_, euler_genus(g.embedding),
            alpha=check_positive_int(self.alpha, "alpha"),
            audit=check_thin_audit(self.audit),
            seed=self.seed,
            objective=lp.objective_,
        )
        return self

    def transform(self, X):
        check_is_fitted(self, "forest_")
        return sorted(self.forest_.edges)


class GenusATSPSolver(BaseEstimator):
    """Full pipeline; ``predict`` gives the tour's vertex sequence."""

    def __init__(
        self,
        alpha=ALPHA,
        dp_cap=DP_CAP,
        lp_tol=1e-6,
        lp_max_rounds=None,
        thin_audit="off",
        seed=0,
        use_hook=True,
        shortcut=True,
        as_permutation=False,
    ):
        self.alpha = alpha
        self.dp_cap = dp_cap
        self.lp_tol = lp_tol
        self.lp_max_rounds = lp_max_rounds
        self.thin_audit = thin_audit
        self.seed = seed
        self.use_hook = use_hook
        self.shortcut = shortcut
        self.as_permutation = as_permutation

    def _config(self) -> SolverConfig:
        return SolverConfig(
            alpha=check_positive_int(self.alpha, "alpha"),
            dp_cap=check_positive_int(self.dp_cap, "dp_cap"),
            hook=general_atsp_hook if self.use_hook else None,
            lp_tol=check_tolerance(self.lp_tol, "lp_tol"),
            lp_max_rounds=check_positive_int(self.lp_max_rounds, "lp_max_rounds", allow_none=True),
            thin_audit=check_thin_audit(self.thin_audit),
            seed=self.seed,
            shortcut=self.shortcut,
            as_permutation=self.as_permutation,
        )

    def fit(self, X, y=None):
        g = check_instance(X)
        self.graph_ = g
        self.tour_ = solve(g, self._config())
        self.certificate_ = self.tour_.certificate
        self.cost_ = self.tour_.cost
        return self

    def predict(self, X=None):
        check_is_fitted(self, "tour_")
        if self.as_permutation:
            return self.tour_.permutation(self.graph_)
        return self.tour_.vertices(self.graph_)

    def fit_predict(self, X, y=None):
        return self.fit(X).predict()
