"""Memory kernels for the Volterra term.

Two families are supported:

* :class:`Abel` -- ``t**(alpha-1) / Gamma(alpha)`` with ``0 < alpha <= 1``.
  ``alpha = 1`` gives ``beta == 1`` and is admitted only as a closed-form
  test limit.
* :class:`ExpSum` -- ``sum_i a_i exp(-b_i t)`` with ``a_i, b_i > 0``; this is
  completely monotonic and integrable on the half line.

Both are immutable and all methods are pure.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping, Sequence, Union

import numpy as np

__all__ = ["Abel", "ExpSum", "Kernel", "KernelError", "kernel_from_spec"]


class KernelError(ValueError):
    """Invalid kernel parameters or an argument outside a kernel's domain."""


def _as_float_array(t):
    arr = np.asarray(t, dtype=float)
    return arr, arr.ndim == 0


@dataclass(frozen=True)
class Abel:
    """Abel kernel ``omega_alpha(t) = t**(alpha-1) / Gamma(alpha)``."""

    alpha: float

    def __post_init__(self):
        a = float(self.alpha)
        if not math.isfinite(a) or not 0.0 < a <= 1.0:
            raise KernelError(f"alpha out of (0,1]: {self.alpha!r}")
        object.__setattr__(self, "alpha", a)

    @property
    def family(self) -> str:
        return "abel"

    def eval(self, t):
        arr, scalar = _as_float_array(t)
        if np.any(arr <= 0.0):
            raise KernelError("Abel kernel is only defined for t > 0")
        out = arr ** (self.alpha - 1.0) / math.gamma(self.alpha)
        return float(out) if scalar else out

    __call__ = eval

    def cumulative(self, t):
        """``(beta * 1)(t) = t**alpha / Gamma(alpha + 1)``."""
        arr, scalar = _as_float_array(t)
        if np.any(arr < 0.0):
            raise KernelError("cumulative integral needs t >= 0")
        out = arr**self.alpha / math.gamma(self.alpha + 1.0)
        return float(out) if scalar else out

    def l1_norm(self) -> float:
        return math.inf

    def l1_norm_on(self, t: float) -> float:
        """``int_0^t |beta|``."""
        return self.cumulative(t)

    def laplace_symbol(self, s):
        """Principal branch of ``s**(-alpha)``."""
        s = np.asarray(s, dtype=complex)
        if np.any(s.real <= 0.0):
            raise KernelError("Laplace symbol needs Re s > 0")
        out = s ** (-self.alpha)
        return complex(out) if out.ndim == 0 else out

    def to_spec(self) -> dict:
        return {"family": "abel", "alpha": self.alpha}


@dataclass(frozen=True)
class ExpSum:
    """Finite exponential sum ``sum_i a_i exp(-b_i t)``.

    ``terms`` is a sequence of ``(a_i, b_i)`` pairs, both strictly positive.
    """

    terms: tuple

    def __post_init__(self):
        pairs = []
        for term in self.terms:
            try:
                a, b = (float(x) for x in term)
            except (TypeError, ValueError) as exc:
                raise KernelError(f"bad exponential term {term!r}") from exc
            if not (math.isfinite(a) and math.isfinite(b)) or a <= 0.0 or b <= 0.0:
                raise KernelError(f"exponential terms need a > 0 and b > 0, got {term!r}")
            pairs.append((a, b))
        if not pairs:
            raise KernelError("ExpSum needs at least one term")
        object.__setattr__(self, "terms", tuple(pairs))

    @property
    def family(self) -> str:
        return "expsum"

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([a for a, _ in self.terms])

    @property
    def rates(self) -> np.ndarray:
        return np.array([b for _, b in self.terms])

    def eval(self, t):
        arr, scalar = _as_float_array(t)
        if np.any(arr < 0.0):
            raise KernelError("ExpSum kernel is only defined for t >= 0")
        out = sum(a * np.exp(-b * arr) for a, b in self.terms)
        return float(out) if scalar else out

    __call__ = eval

    def cumulative(self, t):
        """``sum_i (a_i/b_i)(1 - exp(-b_i t))``."""
        arr, scalar = _as_float_array(t)
        if np.any(arr < 0.0):
            raise KernelError("cumulative integral needs t >= 0")
        out = sum(-(a / b) * np.expm1(-b * arr) for a, b in self.terms)
        return float(out) if scalar else out

    def l1_norm(self) -> float:
        return float(sum(a / b for a, b in self.terms))

    def l1_norm_on(self, t: float) -> float:
        return self.cumulative(t)

    def laplace_symbol(self, s):
        s = np.asarray(s, dtype=complex)
        if np.any(s.real <= 0.0):
            raise KernelError("Laplace symbol needs Re s > 0")
        out = sum(a / (s + b) for a, b in self.terms)
        return complex(out) if np.ndim(out) == 0 else out

    def to_spec(self) -> dict:
        return {"family": "expsum", "terms": [list(p) for p in self.terms]}


Kernel = Union[Abel, ExpSum]


def kernel_from_spec(spec: Mapping[str, Any]) -> Kernel:
    """Build a kernel from ``{"family": "abel", "alpha": ...}`` or
    ``{"family": "expsum", "terms": [[a, b], ...]}``."""
    if not isinstance(spec, Mapping):
        raise KernelError("kernel spec must be an object")
    family = spec.get("family")
    if family == "abel":
        if "alpha" not in spec:
            raise KernelError("abel kernel needs 'alpha'")
        return Abel(spec["alpha"])
    if family == "expsum":
        terms = spec.get("terms")
        if not isinstance(terms, Sequence) or isinstance(terms, str):
            raise KernelError("expsum kernel needs a list of [a, b] terms")
        return ExpSum(tuple(tuple(t) if isinstance(t, Sequence) else t for t in terms))
    raise KernelError(f"unknown kernel family {family!r}")
