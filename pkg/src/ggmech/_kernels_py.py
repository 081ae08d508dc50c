"""Pure-numpy versions of the compiled kernels in ``_kernels.pyx``."""

from math import comb

import numpy as np


def mc_coefficients(abs_u, delta1, p):
    """Per-draw polynomial coefficients in 1/b of the pDP loss bound.

    Column ``j - 1`` holds ``C(p, j) * sum_k |u_k|**(p-j) * delta1_k**j``
    for ``j = 1 .. p-1``.
    """
    abs_u = np.ascontiguousarray(abs_u, dtype=np.float64)
    delta1 = np.asarray(delta1, dtype=np.float64)
    n = abs_u.shape[0]
    out = np.empty((n, max(p - 1, 0)))
    for j in range(1, p):
        out[:, j - 1] = comb(p, j) * (abs_u ** (p - j) @ delta1**j)
    return out


def exceed_fraction(coef, inv_b, rhs):
    """Fraction of rows with ``sum_j coef[:, j-1] * inv_b**j > rhs``."""
    coef = np.asarray(coef, dtype=np.float64)
    n, m = coef.shape
    if n == 0:
        return 0.0
    acc = np.zeros(n)
    for j in range(m, 0, -1):
        acc += coef[:, j - 1]
        acc *= inv_b
    return float(np.count_nonzero(acc > rhs)) / n
