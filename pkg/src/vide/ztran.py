"""z-transform diagnostics for weight sequences.

A weight sequence ``w_0, w_1, ...`` has generating function
``G(z) = sum_n w_n z**(-n)``.  The rules used by the schemes are positive
type when ``Re G >= 0`` on every circle ``|z| = exp(s0) > 1``; this module
samples that, cross-checks it with random quadratic forms, and inverts
closed-form symbols by trapezoidal contour quadrature.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .kernel import ExpSum
from .quadrature import build_cq_trap, build_pi

__all__ = [
    "ZTransformError",
    "SymbolScan",
    "gen_eval",
    "tail_bound",
    "positivity_scan",
    "quadratic_form_check",
    "inverse_z",
    "inverse_z_all",
    "trap_symbol",
    "bdf2_cq_symbol",
    "iq_symbol",
    "cn_symbol",
    "bdf2_symbol",
    "estimate_c_alpha",
    "DEFAULT_RADIUS",
    "DEFAULT_NODES",
    "MIN_SAMPLES",
]

DEFAULT_RADIUS = math.exp(0.25)
DEFAULT_NODES = 4096
MIN_SAMPLES = 256
POSITIVITY_SLACK = 1e-10


class ZTransformError(ValueError):
    pass


def tail_bound(w, radius: float, decay_power: float = 0.0) -> float:
    """Bound on ``sum_{n>N} |w_n| r**(-n)`` assuming ``|w_n| <= C n**decay_power``.

    ``C`` is fitted as ``max_{n>=1} |w_n| n**(-decay_power)`` over the stored
    range (the tail estimate of the last quarter would be tighter but is not
    an upper bound for sequences that are still transient).
    """
    w = np.asarray(w, dtype=float)
    N = w.size - 1
    if radius <= 1.0:
        raise ZTransformError("tail bound needs radius > 1")
    if N < 1:
        return 0.0
    n = np.arange(1, N + 1, dtype=float)
    C = float(np.max(np.abs(w[1:]) * n ** (-decay_power)))
    if C == 0.0:
        return 0.0
    # n**p r**-n is decreasing for n >= N+1 when p <= 0, which all shipped families satisfy
    p = min(decay_power, 0.0)
    log_term = math.log(C) + p * math.log(N + 1.0) - (N + 1.0) * math.log(radius)
    if log_term < -745.0:
        return 0.0
    return math.exp(log_term) / (1.0 - 1.0 / radius)


def gen_eval(w, z, decay_power: float = 0.0):
    """Partial sum ``sum_{n<=N} w_n z**(-n)`` and a bound on the truncated tail.

    Parameters
    ----------
    w : array_like
        Real weights ``w_0..w_N``.
    z : complex or array of complex
        Evaluation points, all with ``|z| > 1``.
    decay_power : float
        Exponent ``p`` in the tail model ``|w_n| <= C n**p``; use
        ``alpha - 1`` for the convolution-quadrature and product-integration
        families and ``0`` for geometrically decaying ones.

    Returns
    -------
    value, tail : complex or ndarray, float
    """
    w = np.asarray(w, dtype=float)
    z_arr = np.asarray(z, dtype=complex)
    if np.any(np.abs(z_arr) <= 1.0):
        raise ZTransformError("generating function is evaluated only for |z| > 1")
    zeta = 1.0 / z_arr
    # Horner in zeta = 1/z
    acc = np.zeros_like(zeta)
    for c in w[::-1]:
        acc = acc * zeta + c
    radius = float(np.min(np.abs(z_arr)))
    tail = tail_bound(w, radius, decay_power)
    if acc.ndim == 0:
        return complex(acc), tail
    return acc, tail


@dataclass(frozen=True)
class SymbolScan:
    """Result of sampling ``Re G`` on ``|z| = exp(s0)``."""

    s0: float
    samples: int
    min_real_part: float
    argmin_angle: float
    tail_bound: float
    passed: bool

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"


def positivity_scan(w, s0: float, samples: int = DEFAULT_NODES, decay_power: float = 0.0) -> SymbolScan:
    """Minimum of ``Re G(exp(s0 + i eta))`` over ``samples`` equispaced angles.

    The sum is evaluated with one FFT of ``w_n exp(-n s0)`` folded modulo
    ``samples``.  The scan passes when the minimum is at least
    ``-(tail bound + 1e-10)``.
    """
    if not s0 > 0:
        raise ZTransformError("s0 must be > 0")
    samples = int(samples)
    if samples < MIN_SAMPLES:
        raise ZTransformError(f"need at least {MIN_SAMPLES} samples")
    w = np.asarray(w, dtype=float)
    n = np.arange(w.size)
    damped = w * np.exp(-s0 * n)
    folded = np.zeros(samples)
    np.add.at(folded, n % samples, damped)
    values = np.fft.fft(folded).real
    j = int(np.argmin(values))
    tail = tail_bound(w, math.exp(s0), decay_power)
    lo = float(values[j])
    return SymbolScan(
        s0=float(s0),
        samples=samples,
        min_real_part=lo,
        argmin_angle=2.0 * math.pi * j / samples,
        tail_bound=tail,
        passed=lo >= -(tail + POSITIVITY_SLACK),
    )


def _toeplitz_lower(w, length):
    w = np.asarray(w, dtype=float)
    col = np.zeros(length)
    m = min(length, w.size)
    col[:m] = w[:m]
    idx = np.arange(length)
    diff = idx[:, None] - idx[None, :]
    T = np.where(diff >= 0, col[np.clip(diff, 0, length - 1)], 0.0)
    return T


def quadratic_form_check(w, trials: int = 1000, length: int = 64, seed: int = 0) -> float:
    """Smallest ``sum_n (sum_{p<=n} w_{n-p} V_p) V_n`` found over unit vectors ``V``.

    Random Gaussian directions are tried together with the eigenvector of the
    smallest eigenvalue of the symmetric part of the lower Toeplitz matrix,
    which is the exact minimiser over unit vectors.
    """
    if length < 1:
        raise ZTransformError("length must be >= 1")
    T = _toeplitz_lower(w, int(length))
    rng = np.random.default_rng(seed)
    V = rng.standard_normal((int(trials), int(length)))
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    forms = np.einsum("ij,jk,ik->i", V, T, V) if trials else np.array([np.inf])
    sym = 0.5 * (T + T.T)
    vals, vecs = np.linalg.eigh(sym)
    probe = vecs[:, 0]
    return float(min(forms.min(), probe @ T @ probe))


def _check_nodes(nodes: int) -> int:
    nodes = int(nodes)
    if nodes < 1 or nodes & (nodes - 1):
        raise ZTransformError("nodes must be a power of two")
    return nodes


def inverse_z(gen: Callable, m: int, radius: float = DEFAULT_RADIUS, nodes: int = DEFAULT_NODES) -> float:
    """``g_m`` from ``G`` by the trapezoidal rule on ``|z| = radius``.

    ``g_m = r**m * mean_j G(r e^{i theta_j}) e^{i m theta_j}``.
    """
    if radius <= 1.0:
        raise ZTransformError("contour radius must be > 1")
    nodes = _check_nodes(nodes)
    theta = 2.0 * math.pi * np.arange(nodes) / nodes
    z = radius * np.exp(1j * theta)
    vals = np.asarray(gen(z), dtype=complex)
    return float((radius**m * np.mean(vals * np.exp(1j * m * theta))).real)


def inverse_z_all(gen: Callable, m_max: int, radius: float = DEFAULT_RADIUS,
                  nodes: int = DEFAULT_NODES) -> np.ndarray:
    """``g_0..g_{m_max}`` from a single FFT of the sampled symbol."""
    if radius <= 1.0:
        raise ZTransformError("contour radius must be > 1")
    nodes = _check_nodes(nodes)
    if m_max >= nodes:
        raise ZTransformError("m_max must be below the number of nodes")
    theta = 2.0 * math.pi * np.arange(nodes) / nodes
    vals = np.asarray(gen(radius * np.exp(1j * theta)), dtype=complex)
    coeffs = np.fft.ifft(vals)  # mean_j G_j e^{i m theta_j}
    m = np.arange(m_max + 1)
    return (radius**m * coeffs[: m_max + 1]).real


# -- closed-form symbols -------------------------------------------------------

def trap_symbol(alpha: float) -> Callable:
    """``(2 (1 - 1/z) / (1 + 1/z))**(-alpha)``, principal branch."""

    def gen(z):
        zeta = 1.0 / np.asarray(z, dtype=complex)
        return 2.0 ** (-alpha) * (1.0 - zeta) ** (-alpha) * (1.0 + zeta) ** alpha

    return gen


def bdf2_cq_symbol(alpha: float) -> Callable:
    """``((3 - 1/z)(1 - 1/z) / 2)**(-alpha)``."""

    def gen(z):
        zeta = 1.0 / np.asarray(z, dtype=complex)
        return (2.0 / 3.0) ** alpha * (1.0 - zeta / 3.0) ** (-alpha) * (1.0 - zeta) ** (-alpha)

    return gen


def iq_symbol(kernel: ExpSum, k: float) -> Callable:
    """Generating function of the IQ convolution weights (geometric tails)."""
    from .quadrature import _half_hat_left

    def gen(z):
        zeta = 1.0 / np.asarray(z, dtype=complex)
        out = np.zeros_like(zeta)
        for a, b in kernel.terms:
            x = b * k
            q = (math.expm1(-x) / x) ** 2
            out = out + a * k * (float(_half_hat_left(x)) + q * zeta / (1.0 - math.exp(-x) * zeta))
        return out

    return gen


def cn_symbol(z):
    """``2 (1 - 1/z) / (1 + 1/z)``."""
    zeta = 1.0 / np.asarray(z, dtype=complex)
    return 2.0 * (1.0 - zeta) / (1.0 + zeta)


def bdf2_symbol(z):
    """``3/2 - 2/z + 1/(2 z**2)``."""
    zeta = 1.0 / np.asarray(z, dtype=complex)
    return 1.5 - 2.0 * zeta + 0.5 * zeta**2


# -- the constant C_alpha ------------------------------------------------------

def _horizon(s0: float, n_max: int | None) -> int:
    if n_max is not None:
        return int(n_max)
    return max(1000, int(math.ceil(40.0 / s0)))


def estimate_c_alpha(alpha: float, s0: float = 0.25, n_max: int | None = None,
                     k: float = 0.1, kind: str = "starting") -> float:
    """Numerical surrogate for the unspecified constant ``C_alpha``.

    kind="starting"
        least ``C`` with ``|kappa_{n,0}| <= C k**alpha n**(alpha-1)`` for
        ``1 <= n <= n_max`` (trapezoidal CQ starting weights).
    kind="starting-sum"
        ``s0 * sum_n |kappa_{n,0}| e^{-n s0} / k**alpha``, the constant that
        bounds the starting-weight symbol by ``C_alpha k**alpha / s0``.
    kind="gate"
        ``s0 (Gamma(alpha+2) sum_{n>=0} w_n e^{-n s0} / k**alpha - 1)`` for the
        product-integration weights, i.e. the value that makes
        ``k**alpha <= s0 Gamma(alpha+2) / (s0 + C_alpha)`` equivalent to
        ``sum_n w_n e^{-n s0} <= 1``.

    All three are independent of ``k`` because every weight scales as
    ``k**alpha``; ``k`` only fixes the table that is built.
    """
    if not 0.0 < alpha < 1.0:
        raise ZTransformError("C_alpha is only defined for 0 < alpha < 1")
    if not s0 > 0:
        raise ZTransformError("s0 must be > 0")
    N = _horizon(s0, n_max)
    scale = k**alpha
    if kind == "starting":
        kappa = build_cq_trap(alpha, k, N).starting
        n = np.arange(1, N + 1, dtype=float)
        return float(np.max(np.abs(kappa[1:]) / (scale * n ** (alpha - 1.0))))
    if kind == "starting-sum":
        kappa = build_cq_trap(alpha, k, N).starting
        n = np.arange(1, N + 1, dtype=float)
        return float(s0 * np.sum(np.abs(kappa[1:]) * np.exp(-s0 * n)) / scale)
    if kind == "gate":
        w = build_pi(alpha, k, N).w
        n = np.arange(N + 1, dtype=float)
        total = float(np.sum(w * np.exp(-s0 * n)))
        return s0 * (math.gamma(alpha + 2.0) * total / scale - 1.0)
    raise ZTransformError(f"unknown C_alpha kind {kind!r}")
