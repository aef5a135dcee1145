"""Dense two-phase tableau simplex for small linear programs.

Solves ``min c.x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0``. Sized for
the household dispatch problem (a few hundred rows and columns at most); no
sparsity, no presolve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TOL = 1e-9


class LPError(Exception):
    pass


class Infeasible(LPError):
    pass


class Unbounded(LPError):
    pass


@dataclass
class LPResult:
    x: np.ndarray
    fun: float
    iterations: int


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    col_vals = T[:, col].copy()
    col_vals[row] = 0.0
    T -= np.outer(col_vals, T[row])


def _run(T: np.ndarray, basis: list[int], n_cols: int, max_iter: int) -> int:
    """Minimise the objective held in the last row of ``T`` over columns < n_cols."""
    m = T.shape[0] - 1
    degenerate = 0
    for it in range(max_iter):
        cost = T[-1, :n_cols]
        if degenerate > 50:
            # Bland's rule: first improving column, guaranteed to terminate
            cand = np.flatnonzero(cost < -TOL)
            if cand.size == 0:
                return it
            col = int(cand[0])
        else:
            col = int(np.argmin(cost))
            if cost[col] >= -TOL:
                return it
        colv = T[:m, col]
        pos = colv > TOL
        if not pos.any():
            raise Unbounded("objective is unbounded below")
        ratios = np.full(m, np.inf)
        ratios[pos] = T[:m, -1][pos] / colv[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + TOL * max(1.0, abs(best)))
        row = int(min(ties, key=lambda r: basis[r]))
        degenerate = degenerate + 1 if best <= TOL else 0
        _pivot(T, row, col)
        basis[row] = col
    raise LPError(f"simplex did not terminate in {max_iter} iterations")


def solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, max_iter: int = 50_000) -> LPResult:
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(-1, n)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float)
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, n)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float)
    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq

    # standard form: [A_ub I; A_eq 0] [x; s] = b
    A = np.zeros((m, n + m_ub))
    A[:m_ub, :n] = A_ub
    A[:m_ub, n:] = np.eye(m_ub)
    A[m_ub:, :n] = A_eq
    b = np.concatenate([b_ub, b_eq])
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1
    n_std = n + m_ub

    # slack columns serve as the starting basis where possible
    basis = [-1] * m
    for i in range(m_ub):
        if not neg[i]:
            basis[i] = n + i
    art_rows = [i for i in range(m) if basis[i] < 0]
    n_art = len(art_rows)
    T = np.zeros((m + 1, n_std + n_art + 1))
    T[:m, :n_std] = A
    T[:m, -1] = b
    for k, i in enumerate(art_rows):
        T[i, n_std + k] = 1.0
        basis[i] = n_std + k

    iters = 0
    if n_art:
        T[-1, n_std : n_std + n_art] = 1.0
        for i in art_rows:
            T[-1] -= T[i]
        iters += _run(T, basis, n_std + n_art, max_iter)
        if -T[-1, -1] > 1e-7 * max(1.0, np.abs(b).max()):
            raise Infeasible(f"phase 1 residual {-T[-1, -1]:.3g}")
        # drive remaining artificials out of the basis; drop redundant rows
        keep = []
        for r in range(m):
            if basis[r] >= n_std:
                nz = np.flatnonzero(np.abs(T[r, :n_std]) > TOL)
                if nz.size == 0:
                    continue
                _pivot(T, r, int(nz[0]))
                basis[r] = int(nz[0])
            keep.append(r)
        T = np.vstack([T[keep], T[-1:]])
        basis = [basis[r] for r in keep]
        T = np.delete(T, np.s_[n_std : n_std + n_art], axis=1)

    m2 = T.shape[0] - 1
    T[-1] = 0.0
    T[-1, :n] = c
    for r in range(m2):
        if T[-1, basis[r]] != 0.0:
            T[-1] -= T[-1, basis[r]] * T[r]
    iters += _run(T, basis, n_std, max_iter)

    # recompute basic values from the original data to shed tableau round-off
    x_std = np.zeros(n_std)
    sol, *_ = np.linalg.lstsq(A[:, basis], b, rcond=None)
    x_std[basis] = sol
    x_std[np.abs(x_std) < 1e-12] = 0.0
    x = x_std[:n]
    return LPResult(x=x, fun=float(c @ x), iterations=iters)
