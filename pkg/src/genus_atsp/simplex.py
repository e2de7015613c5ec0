"""Dense two-phase tableau simplex with Bland's rule, plus a HiGHS adapter.

Both backends solve::

    min c.x   s.t.  A_eq x = b_eq,  A_ge x >= b_ge,  x >= 0

and return ``(x, objective)``.  The simplex backend is the default; it is
deterministic down to the choice among degenerate optima.
"""

from __future__ import annotations

import numpy as np

from genus_atsp.exceptions import LpInfeasible, LpUnbounded, SolverStall


def _pivot(tab: np.ndarray, row: int, col: int) -> None:
    tab[row] /= tab[row, col]
    factor = tab[:, col].copy()
    factor[row] = 0.0
    tab -= np.outer(factor, tab[row])


def _run(tab: np.ndarray, basis: list[int], ncols: int, tol: float, max_iter: int) -> None:
    m = len(basis)
    for _ in range(max_iter):
        red = tab[m, :ncols]
        candidates = np.flatnonzero(red < -tol)
        if candidates.size == 0:
            return
        col = int(candidates[0])
        column = tab[:m, col]
        rows = np.flatnonzero(column > tol)
        if rows.size == 0:
            raise LpUnbounded("objective unbounded below")
        ratios = tab[rows, -1] / column[rows]
        best = ratios.min()
        ties = rows[ratios <= best + tol * max(1.0, abs(best))]
        row = int(min(ties, key=lambda r: basis[r]))
        _pivot(tab, row, col)
        basis[row] = col
    raise SolverStall(f"simplex exceeded {max_iter} pivots")


def simplex_solve(c, a_eq=None, b_eq=None, a_ge=None, b_ge=None, *, tol=1e-9, max_iter=100_000):
    c = np.asarray(c, dtype=float)
    n = c.size
    a_eq = np.zeros((0, n)) if a_eq is None else np.asarray(a_eq, dtype=float).reshape(-1, n)
    a_ge = np.zeros((0, n)) if a_ge is None else np.asarray(a_ge, dtype=float).reshape(-1, n)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float)
    b_ge = np.zeros(0) if b_ge is None else np.asarray(b_ge, dtype=float)
    m_eq, m_ge = len(a_eq), len(a_ge)
    m = m_eq + m_ge
    # columns: structural | surplus | artificial | rhs
    n_struct = n + m_ge
    a = np.zeros((m, n_struct))
    a[:m_eq, :n] = a_eq
    a[m_eq:, :n] = a_ge
    a[m_eq:, n:] = -np.eye(m_ge)
    b = np.concatenate([b_eq, b_ge])
    neg = b < 0
    a[neg] *= -1
    b[neg] *= -1

    tab = np.zeros((m + 1, n_struct + m + 1))
    tab[:m, :n_struct] = a
    tab[:m, n_struct : n_struct + m] = np.eye(m)
    tab[:m, -1] = b
    # phase 1 objective: sum of artificials, priced out
    tab[m, :n_struct] = -a.sum(axis=0)
    tab[m, -1] = -b.sum()
    basis = list(range(n_struct, n_struct + m))
    _run(tab, basis, n_struct + m, tol, max_iter)
    if -tab[m, -1] > 1e-7 * max(1.0, b.sum()):
        raise LpInfeasible(f"phase 1 ended with infeasibility {-tab[m, -1]:.3g}")

    keep = []
    for i in range(m):
        if basis[i] < n_struct:
            keep.append(i)
            continue
        cols = np.flatnonzero(np.abs(tab[i, :n_struct]) > 1e-9)
        if cols.size:
            _pivot(tab, i, int(cols[0]))
            basis[i] = int(cols[0])
            keep.append(i)
        # else: redundant row, dropped below
    tab = np.vstack([tab[keep][:, list(range(n_struct)) + [tab.shape[1] - 1]], np.zeros((1, n_struct + 1))])
    basis = [basis[i] for i in keep]
    mk = len(basis)
    cost = np.zeros(n_struct)
    cost[:n] = c
    tab[mk, :n_struct] = cost - cost[basis] @ tab[:mk, :n_struct]
    tab[mk, -1] = -cost[basis] @ tab[:mk, -1]
    _run(tab, basis, n_struct, tol, max_iter)

    x = np.zeros(n_struct)
    x[basis] = tab[:mk, -1]
    x = x[:n]
    x[np.abs(x) < 1e-10] = 0.0
    return x, float(c @ x)


class SimplexBackend:
    name = "simplex"

    def __init__(self, tol: float = 1e-9, max_iter: int = 100_000):
        self.tol = tol
        self.max_iter = max_iter

    def solve(self, c, a_eq, b_eq, a_ge, b_ge):
        return simplex_solve(c, a_eq, b_eq, a_ge, b_ge, tol=self.tol, max_iter=self.max_iter)


class HighsBackend:
    """scipy's HiGHS; handy as an independent check of the simplex backend."""

    name = "highs"

    def solve(self, c, a_eq, b_eq, a_ge, b_ge):
        from scipy.optimize import linprog

        a_ub = None if a_ge is None or len(a_ge) == 0 else -np.asarray(a_ge, dtype=float)
        b_ub = None if a_ub is None else -np.asarray(b_ge, dtype=float)
        has_eq = a_eq is not None and len(a_eq) > 0
        res = linprog(
            c,
            A_ub=a_ub,
            b_ub=b_ub,
            A_eq=a_eq if has_eq else None,
            b_eq=b_eq if has_eq else None,
            bounds=(0, None),
            method="highs",
        )
        if res.status == 2:
            raise LpInfeasible(res.message)
        if res.status == 3:
            raise LpUnbounded(res.message)
        if res.status != 0:
            raise SolverStall(res.message)
        x = np.asarray(res.x, dtype=float)
        x[np.abs(x) < 1e-10] = 0.0
        return x, float(np.asarray(c, dtype=float) @ x)


BACKENDS = {"simplex": SimplexBackend, "highs": HighsBackend}


def get_backend(backend) -> object:
    if isinstance(backend, str):
        try:
            return BACKENDS[backend]()
        except KeyError:
            raise ValueError(f"unknown LP backend {backend!r}; choose from {sorted(BACKENDS)}") from None
    return backend
