"""Quadrature weights for the memory term and their evaluation on a history.

Four rules are built on a uniform grid ``t_n = n k``:

``iq``
    hat-function interpolation weights for an integrable exponential-sum
    kernel, with starting weights ``chi_{n,0}``.
``cq-trap``
    trapezoidal convolution quadrature for the Abel kernel; weights are the
    Taylor coefficients of ``(2(1-z)/(1+z))**(-alpha)`` and the starting
    weights ``kappa_{n,0}`` make the rule exact on constants.
``cq-bdf2``
    BDF2 convolution quadrature, coefficients of ``((3-z)(1-z)/2)**(-alpha)``
    with starting weights ``varpi_{n,0}``.
``pi``
    product integration of the Abel kernel against a piecewise-constant
    midpoint interpolant (no starting weights).

Weight tables are precomputed up to ``n_max`` and are immutable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import _backend
from .kernel import Abel, ExpSum, Kernel

__all__ = [
    "Rule",
    "WeightTable",
    "QuadratureError",
    "build_iq",
    "build_cq_trap",
    "build_cq_bdf2",
    "build_pi",
    "build_table",
    "binomial_series",
    "iq_weights_by_quadrature",
    "memory_half",
    "memory_full",
]


class QuadratureError(ValueError):
    """Bad rule parameters, an unsupported kernel pairing or a short history."""


class Rule(str, Enum):
    IQ = "iq"
    CQ_TRAP = "cq-trap"
    CQ_BDF2 = "cq-bdf2"
    PI = "pi"


@dataclass(frozen=True, eq=False)
class WeightTable:
    """Convolution weights ``w_0..w_{n_max}`` and starting weights of one rule.

    ``scale`` is the factor the rule applies to the convolution weights:
    ``k**alpha`` for the two CQ rules and ``1`` otherwise.  ``starting`` is
    empty for ``pi``.
    """

    rule: Rule
    k: float
    alpha: float | None
    n_max: int
    w: np.ndarray = field(repr=False)
    starting: np.ndarray = field(repr=False)
    scale: float = 1.0
    kernel: Kernel | None = None

    def __post_init__(self):
        self.w.setflags(write=False)
        self.starting.setflags(write=False)

    @property
    def effective(self) -> np.ndarray:
        """Weights as they multiply the history, i.e. ``scale * w``."""
        return self.scale * self.w

    def half_start(self, n: int) -> float:
        """Coefficient of ``phi^0`` in the averaged rule ``Q_{n-1/2}``."""
        if self.rule is Rule.IQ:
            return 0.5 * (self.starting[n] + self.starting[n - 1] - self.w[n - 1])
        if self.rule is Rule.CQ_TRAP:
            return 0.5 * (self.starting[n] + self.starting[n - 1] + self.scale * self.w[n])
        if self.rule is Rule.PI:
            return 0.0
        raise QuadratureError("cq-bdf2 has no averaged form; use memory_full")


def _check_alpha(alpha) -> float:
    a = float(alpha)
    if not math.isfinite(a) or not 0.0 < a <= 1.0:
        raise QuadratureError(f"alpha out of (0,1]: {alpha!r}")
    return a


def _check_grid(k, n_max) -> tuple[float, int]:
    k = float(k)
    if not math.isfinite(k) or k <= 0.0:
        raise QuadratureError(f"time step must be positive, got {k!r}")
    n_max = int(n_max)
    if n_max < 0:
        raise QuadratureError("n_max must be >= 0")
    return k, n_max


def binomial_series(exponent: float, n: int, ratio: float = 1.0) -> np.ndarray:
    """Coefficients of ``(1 - ratio*z)**(-exponent)`` up to ``z**(n-1)``.

    Uses ``c_m = c_{m-1} (m - 1 + exponent) / m * ratio``.
    """
    c = np.empty(n)
    if n == 0:
        return c
    c[0] = 1.0
    m = np.arange(1, n)
    c[1:] = np.cumprod((m - 1.0 + exponent) / m * ratio)
    return c


# -- interpolation quadrature --------------------------------------------------

_SMALL_X = 0.1


def _poly_series(x, coeff):
    """Evaluate ``sum_j coeff[j] x**j`` by Horner's rule."""
    out = np.zeros_like(x)
    for c in coeff[::-1]:
        out = out * x + c
    return out


_G1 = [(-1.0) ** j / math.factorial(j + 2) for j in range(16)]
_Q = [(-1.0) ** j * (j + 1) / math.factorial(j + 2) for j in range(16)]


def _half_hat_left(x):
    # (x - 1 + e^-x) / x^2
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = (np.expm1(-x) + x) / (x * x)
    return np.where(x < _SMALL_X, _poly_series(x, _G1), direct)


def _half_hat_right(x):
    # (1 - (1 + x) e^-x) / x^2
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = (-np.expm1(-x) - x * np.exp(-x)) / (x * x)
    return np.where(x < _SMALL_X, _poly_series(x, _Q), direct)


def build_iq(kernel: Kernel, k: float, n_max: int) -> WeightTable:
    """Hat-function weights ``w_n`` and starting weights ``chi_{n,0}``.

    For each term ``a exp(-b t)`` and ``x = b k``::

        w_0       = a k (x - 1 + e^-x) / x^2
        w_n       = a k e^{-b t_{n-1}} ((1 - e^-x) / x)^2,        n >= 1
        chi_{n,0} = a k e^{-b t_{n-1}} (1 - (1 + x) e^-x) / x^2,  n >= 1

    and ``chi_{0,0} = 0``.
    """
    if not isinstance(kernel, ExpSum):
        raise QuadratureError("iq rule needs an integrable (expsum) kernel")
    k, n_max = _check_grid(k, n_max)
    w = np.zeros(n_max + 1)
    chi = np.zeros(n_max + 1)
    steps = np.arange(n_max, dtype=float)  # n - 1 for n = 1..n_max
    for a, b in kernel.terms:
        x = b * k
        decay = np.exp(-x * steps)
        w[0] += a * k * float(_half_hat_left(x))
        w[1:] += a * k * decay * (np.expm1(-x) / x) ** 2
        chi[1:] += a * k * decay * float(_half_hat_right(x))
    return WeightTable(Rule.IQ, k, None, n_max, w, chi, 1.0, kernel)


def iq_weights_by_quadrature(kernel: Kernel, k: float, n_max: int):
    """Reference ``(w, chi)`` for the IQ rule by adaptive quadrature."""
    from scipy.integrate import quad

    def hat(u):
        return max(1.0 - abs(u), 0.0)

    w = np.zeros(n_max + 1)
    chi = np.zeros(n_max + 1)
    opts = dict(epsabs=1e-14, epsrel=1e-13, limit=200)
    for n in range(n_max + 1):
        tn = n * k
        upper = min(k, tn)
        pieces = [(-k, 0.0)] + ([(0.0, upper)] if upper > 0 else [])
        w[n] = sum(quad(lambda z: kernel.eval(tn - z) * hat(z / k), lo, hi, **opts)[0]
                   for lo, hi in pieces)
        if n >= 1:
            chi[n] = quad(lambda z: kernel.eval(tn - z) * hat(z / k), 0.0, k, **opts)[0]
    return w, chi


# -- convolution quadrature ----------------------------------------------------

def build_cq_trap(alpha: float, k: float, n_max: int) -> WeightTable:
    """Trapezoidal CQ weights and starting weights exact on constants."""
    alpha = _check_alpha(alpha)
    k, n_max = _check_grid(k, n_max)
    n = n_max + 1
    inv = binomial_series(alpha, n)            # (1 - z)^(-alpha)
    num = binomial_series(-alpha, n, -1.0)     # (1 + z)^alpha
    w = 2.0 ** (-alpha) * _backend.series_mul(inv, num, n)
    scale = k**alpha
    t_pow = np.arange(n, dtype=float) ** alpha / math.gamma(alpha + 1.0)
    kappa = scale * (t_pow - np.cumsum(w))
    return WeightTable(Rule.CQ_TRAP, k, alpha, n_max, w, kappa, scale, Abel(alpha))


def build_cq_bdf2(alpha: float, k: float, n_max: int, literal_start: bool = False) -> WeightTable:
    """BDF2 CQ weights and starting weights ``varpi_{n,0}``.

    By default ``varpi_{n,0} = (beta*1)(t_n) - k^alpha sum_{q=0}^{n-1} w_q``, which
    makes ``Q_n(1)`` exact.  ``literal_start=True`` sums ``w_1..w_n`` instead.
    """
    alpha = _check_alpha(alpha)
    k, n_max = _check_grid(k, n_max)
    n = n_max + 1
    third = binomial_series(alpha, n, 1.0 / 3.0)   # (1 - z/3)^(-alpha)
    inv = binomial_series(alpha, n)                # (1 - z)^(-alpha)
    w = (2.0 / 3.0) ** alpha * _backend.series_mul(third, inv, n)
    scale = k**alpha
    t_pow = np.arange(n, dtype=float) ** alpha / math.gamma(alpha + 1.0)
    csum = np.cumsum(w)
    if literal_start:
        partial = csum - w[0]
    else:
        partial = np.concatenate(([0.0], csum[:-1]))
    varpi = scale * (t_pow - partial)
    varpi[0] = 0.0
    return WeightTable(Rule.CQ_BDF2, k, alpha, n_max, w, varpi, scale, Abel(alpha))


# -- product integration -------------------------------------------------------

_SERIES_FROM = 8


def _second_difference_power(p: float, j: np.ndarray) -> np.ndarray:
    """``(j+1)**p - 2 j**p + (j-1)**p`` for integers ``j >= 1`` without cancellation."""
    j = np.asarray(j, dtype=float)
    out = np.empty_like(j)
    small = j < _SERIES_FROM
    js = j[small]
    out[small] = (js + 1.0) ** p - 2.0 * js**p + (js - 1.0) ** p
    jl = j[~small]
    if jl.size:
        x2 = (1.0 / jl) ** 2
        total = np.zeros_like(jl)
        coef = 1.0
        power = np.ones_like(jl)
        for m in range(1, 14):
            # binom(p, 2m) from binom(p, 2m-2)
            coef *= (p - 2 * m + 2) * (p - 2 * m + 1) / ((2 * m - 1) * (2 * m))
            power = power * x2
            total += coef * power
        out[~small] = 2.0 * jl**p * total
    return out


def build_pi(alpha: float, k: float, n_max: int) -> WeightTable:
    """Product-integration weights.

    ``w_0 = k^alpha / Gamma(alpha+2)`` and
    ``w_j = (t_{j+1}^{alpha+1} - 2 t_j^{alpha+1} + t_{j-1}^{alpha+1}) / (k Gamma(alpha+2))``.
    """
    alpha = _check_alpha(alpha)
    k, n_max = _check_grid(k, n_max)
    factor = k**alpha / math.gamma(alpha + 2.0)
    w = np.empty(n_max + 1)
    w[0] = factor
    if n_max >= 1:
        w[1:] = factor * _second_difference_power(alpha + 1.0, np.arange(1, n_max + 1))
    return WeightTable(Rule.PI, k, alpha, n_max, w, np.zeros(0), 1.0, Abel(alpha))


def build_table(rule, k: float, n_max: int, kernel: Kernel | None = None,
                alpha: float | None = None, **kw) -> WeightTable:
    """Dispatch on ``rule``; ``alpha`` defaults to the Abel kernel's exponent."""
    rule = Rule(rule)
    if rule is Rule.IQ:
        if kernel is None:
            raise QuadratureError("iq rule needs a kernel")
        return build_iq(kernel, k, n_max)
    if alpha is None:
        if not isinstance(kernel, Abel):
            raise QuadratureError(f"{rule.value} rule needs alpha or an Abel kernel")
        alpha = kernel.alpha
    builders = {Rule.CQ_TRAP: build_cq_trap, Rule.CQ_BDF2: build_cq_bdf2, Rule.PI: build_pi}
    return builders[rule](alpha, k, n_max, **kw)


# -- memory terms --------------------------------------------------------------

def _history(table: WeightTable, history) -> np.ndarray:
    h = np.asarray(history, dtype=float)
    if h.ndim == 1:
        h = h[:, None]
    if h.ndim != 2:
        raise QuadratureError("history must be a sequence of states")
    n = h.shape[0] - 1
    if n < 1:
        raise QuadratureError("history needs at least phi^0 and phi^1")
    if n > table.n_max:
        raise QuadratureError(f"history length {n + 1} exceeds table n_max {table.n_max}")
    return np.ascontiguousarray(h)


def _squeeze(out, history):
    return out[0] if np.ndim(history) == 1 else out


def memory_half(table: WeightTable, history):
    """Averaged memory term ``Q_{n-1/2}(phi)`` for a history ``phi^0..phi^n``."""
    if table.rule is Rule.CQ_BDF2:
        raise QuadratureError("cq-bdf2 is evaluated at full steps; use memory_full")
    h = _history(table, history)
    n = h.shape[0] - 1
    mid = np.empty_like(h)
    mid[0] = 0.0
    mid[1:] = 0.5 * (h[1:] + h[:-1])
    eff = np.ascontiguousarray(table.effective)
    out = table.half_start(n) * h[0] + _backend.history_sum(eff, mid, n, n)
    if table.rule is Rule.PI:
        out = out + 0.5 * table.w[n - 1] * (h[1] - h[0])
    return _squeeze(out, history)


def memory_full(table: WeightTable, history):
    """Full-step memory term ``Q_n(phi)`` for ``iq`` and ``cq-bdf2``."""
    if table.rule not in (Rule.IQ, Rule.CQ_BDF2):
        raise QuadratureError(f"{table.rule.value} is evaluated at half steps; use memory_half")
    h = _history(table, history)
    n = h.shape[0] - 1
    eff = np.ascontiguousarray(table.effective)
    out = table.starting[n] * h[0] + _backend.history_sum(eff, h, n, n)
    return _squeeze(out, history)
