"""NumPy implementations of the hot loops, used when the extension is absent."""
import numpy as np


def history_sum(w, hist, n, m):
    """Return ``sum_{p=1}^{m} w[n-p] * hist[p, :]``."""
    if m > n or m >= hist.shape[0] or n > w.shape[0]:
        raise IndexError("history_sum: index out of range")
    if m == 0:
        return np.zeros(hist.shape[1])
    return w[n - m:n][::-1] @ hist[1:m + 1]


def series_mul(a, b, n):
    """First ``n`` coefficients of the power-series product ``a(z) b(z)``."""
    if len(a) < n or len(b) < n:
        raise IndexError("series_mul: inputs shorter than n")
    return np.convolve(a[:n], b[:n])[:n]
