# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the Monte-Carlo pDP calibration loop."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef double _comb(int n, int k):
    cdef double out = 1.0
    cdef int i
    for i in range(1, k + 1):
        out = out * (n - k + i) / i
    return out


def mc_coefficients(abs_u, delta1, int p):
    cdef double[:, ::1] u = np.ascontiguousarray(abs_u, dtype=np.float64)
    cdef double[::1] d = np.ascontiguousarray(delta1, dtype=np.float64)
    cdef Py_ssize_t n = u.shape[0], r = u.shape[1], i, k
    cdef int j, m = p - 1 if p > 1 else 0
    out = np.zeros((n, m), dtype=np.float64)
    if m == 0:
        return out
    cdef double[:, ::1] c = out
    # w[k, j-1] = C(p, j) * d_k**j, hoisted out of the draw loop
    w_arr = np.empty((r, m), dtype=np.float64)
    cdef double[:, ::1] w = w_arr
    cdef double dpow
    for k in range(r):
        dpow = 1.0
        for j in range(1, p):
            dpow = dpow * d[k]
            w[k, j - 1] = _comb(p, j) * dpow
    # upow[q] = u**q for q = 0 .. p-1; acc is the row being accumulated
    scratch = np.empty(2 * p, dtype=np.float64)
    cdef double[::1] upow = scratch[:p]
    cdef double[::1] acc = scratch[p:]
    cdef double uk
    with nogil:
        for i in range(n):
            for j in range(m):
                acc[j] = 0.0
            for k in range(r):
                uk = u[i, k]
                upow[0] = 1.0
                for j in range(1, p):
                    upow[j] = upow[j - 1] * uk
                for j in range(1, p):
                    acc[j - 1] += w[k, j - 1] * upow[p - j]
            for j in range(m):
                c[i, j] = acc[j]
    return out


def exceed_fraction(coef, double inv_b, double rhs):
    cdef double[:, ::1] c = np.ascontiguousarray(coef, dtype=np.float64)
    cdef Py_ssize_t n = c.shape[0], m = c.shape[1], i, j
    cdef Py_ssize_t hits = 0
    cdef double acc
    if n == 0:
        return 0.0
    with nogil:
        for i in range(n):
            acc = 0.0
            for j in range(m - 1, -1, -1):
                acc = (acc + c[i, j]) * inv_b
            if acc > rhs:
                hits += 1
    return hits / <double>n
