# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: history convolution sums and truncated series products."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def history_sum(const double[::1] w, const double[:, ::1] hist, Py_ssize_t n, Py_ssize_t m):
    """Return ``sum_{p=1}^{m} w[n-p] * hist[p, :]``."""
    cdef Py_ssize_t d = hist.shape[1]
    cdef Py_ssize_t p, j
    cdef double c
    out = np.zeros(d, dtype=np.float64)
    cdef double[::1] acc = out
    if m > n or m >= hist.shape[0] or n > w.shape[0]:
        raise IndexError("history_sum: index out of range")
    if d == 1:
        c = 0.0
        for p in range(1, m + 1):
            c += w[n - p] * hist[p, 0]
        acc[0] = c
        return out
    for p in range(1, m + 1):
        c = w[n - p]
        for j in range(d):
            acc[j] += c * hist[p, j]
    return out


def series_mul(const double[::1] a, const double[::1] b, Py_ssize_t n):
    """First ``n`` coefficients of the power-series product ``a(z) b(z)``."""
    cdef Py_ssize_t i, j, jmax
    cdef double s
    if a.shape[0] < n or b.shape[0] < n:
        raise IndexError("series_mul: inputs shorter than n")
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    for i in range(n):
        s = 0.0
        for j in range(i + 1):
            s += a[j] * b[i - j]
        o[i] = s
    return out
