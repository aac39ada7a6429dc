"""Closed-form time profiles, their kernel convolutions, and forcing terms.

A profile is ``g(t) = p(t) exp(-d t)`` with a polynomial ``p`` and ``d >= 0``
(constants and monomial combinations are the case ``d = 0``).  The
convolutions reduce to Kummer series with positive terms::

    (omega_nu * s^m e^{-ds})(t) = m!/Gamma(m+nu+1) t^{m+nu} e^{-dt} M(nu, m+nu+1, dt)
    (e^{-b.} * s^m e^{-d.})(t)  = t^{m+1} e^{-dt} int_0^1 u^m e^{-(b-d) t (1-u)} du
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

from .kernel import Abel, ExpSum, Kernel

__all__ = [
    "DampedPolynomial",
    "ForcingError",
    "ZeroForcing",
    "ExpForcing",
    "ProfileForcing",
    "scaled_kummer",
    "profile_from_spec",
    "forcing_from_spec",
]

_ASYMPTOTIC_FROM = 500.0


class ForcingError(ValueError):
    pass


def scaled_kummer(a: float, b: float, x) -> np.ndarray:
    """``exp(-x) * M(a, b, x)`` for ``x >= 0`` and ``a, b > 0``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x < 0):
        raise ForcingError("scaled_kummer needs x >= 0")
    out = np.empty_like(x)
    small = x <= _ASYMPTOTIC_FROM
    xs = x[small]
    if xs.size:
        total = np.ones_like(xs)
        term = np.ones_like(xs)
        j = 0
        limit = int(xs.max() + 20.0 * math.sqrt(xs.max()) + 60)
        while j < limit:
            term = term * (a + j) / (b + j) * xs / (j + 1)
            total += term
            j += 1
            if np.all(term <= 1e-17 * total):
                break
        out[small] = np.exp(-xs) * total
    xl = x[~small]
    if xl.size:
        # M(a,b,x) ~ Gamma(b)/Gamma(a) e^x x^(a-b) sum_s (b-a)_s (1-a)_s / s! x^-s
        total = np.ones_like(xl)
        term = np.ones_like(xl)
        for s in range(30):
            term = term * (b - a + s) * (1 - a + s) / ((s + 1) * xl)
            total += term
            if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
                break
        lg = math.lgamma(b) - math.lgamma(a)
        out[~small] = np.exp(lg + (a - b) * np.log(xl)) * total
    return out


def _rl_damped_monomial(nu: float, m: int, d: float, t: np.ndarray) -> np.ndarray:
    """Riemann-Liouville integral ``(omega_nu * s^m e^{-ds})(t)``."""
    coef = math.exp(math.lgamma(m + 1) - math.lgamma(m + nu + 1))
    return coef * t ** (m + nu) * scaled_kummer(nu, m + nu + 1.0, d * t)


def _exp_damped_monomial(rate: float, m: int, d: float, t: np.ndarray) -> np.ndarray:
    """``(e^{-rate .} * s^m e^{-d s})(t)``."""
    y = (rate - d) * t
    out = np.empty_like(t)
    pos = y >= 0
    out[pos] = (np.exp(-d * t[pos]) * t[pos] ** (m + 1)
                * scaled_kummer(m + 1.0, m + 2.0, y[pos]) / (m + 1))
    neg = ~pos
    out[neg] = (np.exp(-rate * t[neg]) * t[neg] ** (m + 1)
                * scaled_kummer(1.0, m + 2.0, -y[neg]) / (m + 1))
    return out


@dataclass(frozen=True, eq=False)
class DampedPolynomial:
    """``g(t) = (sum_m coeffs[m] t^m) exp(-rate t)`` with ``rate >= 0``."""

    coeffs: tuple
    rate: float = 0.0

    def __post_init__(self):
        c = tuple(float(x) for x in self.coeffs)
        if not c:
            c = (0.0,)
        if not all(math.isfinite(x) for x in c):
            raise ForcingError("profile coefficients must be finite")
        if not math.isfinite(self.rate) or self.rate < 0:
            raise ForcingError("profile damping rate must be finite and >= 0")
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "rate", float(self.rate))

    @classmethod
    def quadratic(cls, a, b, c, d):
        """``(a + b t + c t^2) exp(-d t)``."""
        return cls((a, b, c), d)

    @classmethod
    def constant(cls, value):
        return cls((value,), 0.0)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.polynomial.polynomial.polyval(t, self.coeffs) * np.exp(-self.rate * t)

    def derivative(self, order: int = 1) -> "DampedPolynomial":
        p = np.array(self.coeffs)
        for _ in range(order):
            dp = np.polynomial.polynomial.polyder(p) if p.size > 1 else np.zeros(1)
            q = -self.rate * p
            q[: dp.size] += dp
            p = q
        return DampedPolynomial(tuple(p), self.rate)

    def _terms(self):
        return [(m, c) for m, c in enumerate(self.coeffs) if c != 0.0]

    def riemann_liouville(self, nu: float, t):
        """``(omega_nu * g)(t)`` for ``nu > 0``; ``nu = 1`` is the running integral."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t < 0):
            raise ForcingError("convolution needs t >= 0")
        out = np.zeros_like(t)
        for m, c in self._terms():
            out += c * _rl_damped_monomial(nu, m, self.rate, t)
        return out

    def integral(self, t):
        return self.riemann_liouville(1.0, t)

    def exp_convolution(self, rate: float, t):
        """``(e^{-rate .} * g)(t)``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.zeros_like(t)
        for m, c in self._terms():
            out += c * _exp_damped_monomial(rate, m, self.rate, t)
        return out

    def kernel_convolution(self, kernel: Kernel, t):
        """``(beta * g)(t)`` in closed form."""
        if isinstance(kernel, Abel):
            return self.riemann_liouville(kernel.alpha, t)
        if isinstance(kernel, ExpSum):
            return sum(a * self.exp_convolution(b, t) for a, b in kernel.terms)
        raise ForcingError(f"unsupported kernel {kernel!r}")

    def kernel_convolution_integral(self, kernel: Kernel, t):
        """``int_0^t (beta * g) = ((beta * 1) * g)(t)``."""
        if isinstance(kernel, Abel):
            return self.riemann_liouville(kernel.alpha + 1.0, t)
        if isinstance(kernel, ExpSum):
            base = self.integral(t)
            return sum((a / b) * (base - self.exp_convolution(b, t)) for a, b in kernel.terms)
        raise ForcingError(f"unsupported kernel {kernel!r}")

    def to_spec(self) -> dict:
        return {"coeffs": list(self.coeffs), "rate": self.rate}


def profile_from_spec(spec: Mapping[str, Any]) -> DampedPolynomial:
    """``{"coeffs": [...], "rate": d}`` or ``{"a":..,"b":..,"c":..,"d":..}``."""
    if not isinstance(spec, Mapping):
        raise ForcingError("profile spec must be an object")
    if "coeffs" in spec:
        return DampedPolynomial(tuple(spec["coeffs"]), spec.get("rate", 0.0))
    keys = ("a", "b", "c", "d")
    if any(k in spec for k in keys):
        return DampedPolynomial.quadratic(*(spec.get(k, 0.0) for k in keys))
    raise ForcingError("profile needs 'coeffs' or some of 'a','b','c','d'")


# -- forcing terms -------------------------------------------------------------
#
# A forcing exposes values(t) -> (len(t), dim) and averages(k, n) -> (n, dim),
# the latter being sigma^j = (1/k) int_{t_{j-1}}^{t_j} f for j = 1..n.


@dataclass(frozen=True)
class ZeroForcing:
    dim: int

    def values(self, t):
        return np.zeros((np.size(t), self.dim))

    def averages(self, k: float, n: int):
        return np.zeros((n, self.dim))


@dataclass(frozen=True, eq=False)
class ExpForcing:
    """``f(t) = amplitude * exp(-rate t)``."""

    amplitude: np.ndarray
    rate: float = 0.0

    def __post_init__(self):
        amp = np.array(self.amplitude, dtype=float).reshape(-1)
        if not np.all(np.isfinite(amp)):
            raise ForcingError("forcing amplitude must be finite")
        if not math.isfinite(self.rate) or self.rate < 0:
            raise ForcingError("forcing rate must be finite and >= 0")
        object.__setattr__(self, "amplitude", amp)

    @property
    def dim(self) -> int:
        return self.amplitude.size

    def values(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.exp(-self.rate * t)[:, None] * self.amplitude

    def averages(self, k: float, n: int):
        left = k * np.arange(n)
        if self.rate == 0.0:
            factor = np.ones(n)
        else:
            x = self.rate * k
            factor = np.exp(-self.rate * left) * (-np.expm1(-x) / x)
        return factor[:, None] * self.amplitude


@dataclass(frozen=True, eq=False)
class ProfileForcing:
    """Forcing that makes ``u(t) = g(t) v`` solve the equation exactly.

    ``f(t) = g'(t) v + (g(t) + (beta * g)(t)) A v``.
    """

    kernel: Kernel
    profile: DampedPolynomial
    mode: np.ndarray
    applied_mode: np.ndarray

    @property
    def dim(self) -> int:
        return self.mode.size

    def values(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        g = self.profile(t)
        dg = self.profile.derivative()(t)
        mem = self.profile.kernel_convolution(self.kernel, t)
        return dg[:, None] * self.mode + (g + mem)[:, None] * self.applied_mode

    def averages(self, k: float, n: int):
        t = k * np.arange(n + 1)
        g = self.profile(t)
        big_g = self.profile.integral(t)
        mem = self.profile.kernel_convolution_integral(self.kernel, t)
        time_part = np.diff(g) / k
        op_part = (np.diff(big_g) + np.diff(mem)) / k
        return time_part[:, None] * self.mode + op_part[:, None] * self.applied_mode


def forcing_from_spec(spec: Mapping[str, Any] | None, dim: int):
    """``{"type": "zero"}`` or ``{"type": "exp", "amplitude": [...], "rate": r}``."""
    if spec is None:
        return ZeroForcing(dim)
    kind = spec.get("type")
    if kind == "zero":
        return ZeroForcing(dim)
    if kind == "exp":
        amp = spec.get("amplitude", [1.0] * dim)
        if isinstance(amp, (int, float)):
            amp = [float(amp)] * dim
        f = ExpForcing(amp, spec.get("rate", 0.0))
        if f.dim != dim:
            raise ForcingError(f"forcing amplitude has {f.dim} entries, operator dimension is {dim}")
        return f
    raise ForcingError(f"unknown forcing type {kind!r}")

