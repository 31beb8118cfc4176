"""Exact small-instance solver for the l1/l1 trend problem.

The absolute values are split into nonnegative pairs. Writing the trend as
``s = z - u_pos + u_neg`` eliminates ``s`` and leaves the standard-form LP::

    min   1'(u_pos + u_neg) + lam * 1'(v_pos + v_neg)
    s.t.  -D u_pos + D u_neg - v_pos + v_neg = -D z,   all variables >= 0

whose slack columns ``v_pos``/``v_neg`` give an immediate feasible basis. The
LP is solved with a dense tableau simplex using Bland's rule, which cannot
cycle. Only meant as a verification oracle, hence the size cap.
"""

from __future__ import annotations

import numpy as np

from .series import TimeSeries
from .trend import objective, second_diff

MAX_LENGTH = 64


class SimplexError(RuntimeError):
    pass


def simplex(c: np.ndarray, A: np.ndarray, b: np.ndarray, basis: list, tol: float = 1e-11,
            max_pivots: int = 100_000) -> tuple[np.ndarray, float]:
    """Minimize ``c'x`` s.t. ``A x = b, x >= 0`` from a feasible starting basis.

    Args:
        c: cost vector (n,).
        A: constraint matrix (m, n).
        b: right-hand side (m,), nonnegative.
        basis: m column indices forming an identity submatrix of ``A``.

    Returns:
        (x, objective value)
    """
    m, n = A.shape
    tab = np.zeros((m + 1, n + 1))
    tab[:m, :n] = A
    tab[:m, n] = b
    basis = list(basis)
    # reduced-cost row: c - c_B B^-1 A with B = I
    tab[m, :n] = c - c[basis] @ A
    tab[m, n] = -c[basis] @ b

    for _ in range(max_pivots):
        reduced = tab[m, :n]
        candidates = np.flatnonzero(reduced < -tol)
        if candidates.size == 0:
            break
        col = int(candidates[0])
        column = tab[:m, col]
        positive = column > tol
        if not positive.any():
            raise SimplexError("LP is unbounded")
        ratios = np.full(m, np.inf)
        ratios[positive] = tab[:m, n][positive] / column[positive]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + tol * max(1.0, abs(best)))
        row = int(min(ties, key=lambda r: basis[r]))
        tab[row] /= tab[row, col]
        others = np.arange(m + 1) != row
        tab[others] -= np.outer(tab[others, col], tab[row])
        basis[row] = col
    else:
        raise SimplexError("pivot limit reached")

    x = np.zeros(n)
    x[basis] = tab[:m, n]
    return x, float(c @ x)


def lp_oracle(z, lam: float) -> tuple[np.ndarray, float]:
    """Exact minimizer of ``sum|z - s| + lam * sum|D^2 s|`` for short series.

    Returns:
        (trend, objective) with the objective recomputed from the trend.
    """
    z = np.asarray(z.values if isinstance(z, TimeSeries) else z, dtype=float)
    T = z.size
    if T > MAX_LENGTH:
        raise ValueError(f"lp_oracle is capped at length {MAX_LENGTH}, got {T}")
    if T < 3:
        raise ValueError("lp_oracle needs length >= 3")
    if not lam > 0:
        raise ValueError("lambda must be positive")

    m = T - 2
    D = np.zeros((m, T))
    for i in range(m):
        D[i, i:i + 3] = (1.0, -2.0, 1.0)
    eye = np.eye(m)
    A = np.hstack((-D, D, -eye, eye))
    b = -second_diff(z)
    flip = b < 0
    A[flip] *= -1.0
    b = np.abs(b)
    # after the flip the +1 slack of row i is v_neg_i (unflipped) or v_pos_i (flipped)
    basis = [2 * T + i if flip[i] else 2 * T + m + i for i in range(m)]
    c = np.concatenate((np.ones(2 * T), np.full(2 * m, lam)))

    x, _ = simplex(c, A, b, basis)
    s = z - x[:T] + x[T:2 * T]
    return s, objective(z, s, lam)
