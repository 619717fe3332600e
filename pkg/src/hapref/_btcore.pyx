# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels for Bradley-Terry estimation.

Mirrors hapref._btcore_py; the matrices involved are small (n <= ~20), so
the win here is removing per-iteration NumPy dispatch overhead in the
fixed-point loops, which the simulation harness calls thousands of times.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, log1p

cnp.import_array()

BACKEND = "compiled"


cdef int _solve_inplace(double[:, ::1] a, double[::1] b, Py_ssize_t n) except -1:
    """Gaussian elimination with partial pivoting; solution left in b."""
    cdef Py_ssize_t col, row, piv, k
    cdef double best, factor, tmp
    for col in range(n):
        piv = col
        best = fabs(a[col, col])
        for row in range(col + 1, n):
            if fabs(a[row, col]) > best:
                best = fabs(a[row, col])
                piv = row
        if best == 0.0:
            raise ValueError("singular rate matrix; comparison graph may be disconnected")
        if piv != col:
            for k in range(n):
                tmp = a[col, k]
                a[col, k] = a[piv, k]
                a[piv, k] = tmp
            tmp = b[col]
            b[col] = b[piv]
            b[piv] = tmp
        for row in range(col + 1, n):
            factor = a[row, col] / a[col, col]
            if factor != 0.0:
                for k in range(col, n):
                    a[row, k] -= factor * a[col, k]
                b[row] -= factor * b[col]
    for col in range(n - 1, -1, -1):
        tmp = b[col]
        for k in range(col + 1, n):
            tmp -= a[col, k] * b[k]
        b[col] = tmp / a[col, col]
    return 0


def ilsr_pi_step(double[:, ::1] wins, double[::1] pi):
    """One Luce-spectral-ranking step; see the NumPy backend for semantics."""
    cdef Py_ssize_t n = pi.shape[0]
    a_arr = np.zeros((n, n), dtype=np.float64)
    b_arr = np.zeros(n, dtype=np.float64)
    cdef double[:, ::1] a = a_arr
    cdef double[::1] b = b_arr
    cdef Py_ssize_t i, j
    cdef double rate, total
    # a = Q^T for the generator Q with Q[j, i] = wins[i, j] / (pi_i + pi_j)
    for i in range(n):
        for j in range(n):
            if i != j:
                rate = wins[i, j] / (pi[i] + pi[j])
                a[i, j] += rate
                a[j, j] -= rate
    for j in range(n):
        a[n - 1, j] = 1.0
    b[n - 1] = 1.0
    _solve_inplace(a, b, n)
    total = 0.0
    for i in range(n):
        if b[i] < 1e-300:
            b[i] = 1e-300
        total += b[i]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    for i in range(n):
        ov[i] = b[i] / total
    return out


def mm_pi_step(double[:, ::1] wins, double[::1] pi):
    """One minorization-maximization step; see the NumPy backend for semantics."""
    cdef Py_ssize_t n = pi.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i, j
    cdef double w, s, nij
    for i in range(n):
        w = 0.0
        s = 0.0
        for j in range(n):
            if j != i:
                w += wins[i, j]
                nij = wins[i, j] + wins[j, i]
                if nij != 0.0:
                    s += nij / (pi[i] + pi[j])
        if w <= 0.0 or s <= 0.0:
            raise ValueError("every item needs at least one win and one match; add regularization")
        ov[i] = w / s
    return out


def matrix_log_likelihood(double[:, ::1] wins, double[::1] theta):
    """Sum over ordered pairs of wins[i, j] * ln P(i beats j) under theta."""
    cdef Py_ssize_t n = theta.shape[0]
    cdef Py_ssize_t i, j
    cdef double total = 0.0
    cdef double d
    for i in range(n):
        for j in range(n):
            if i != j and wins[i, j] != 0.0:
                d = theta[i] - theta[j]
                if d >= 0.0:
                    total -= wins[i, j] * log1p(exp(-d))
                else:
                    total += wins[i, j] * (d - log1p(exp(d)))
    return total
