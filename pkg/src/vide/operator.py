"""Self-adjoint positive-definite operators with shifted solves.

``Diagonal`` acts on independent scalar modes; ``Laplacian1D`` is the
three-point Dirichlet Laplacian ``(1/h^2) tridiag(-1, 2, -1)`` on ``M``
interior nodes of ``(0, 1)`` with ``h = 1/(M+1)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Mapping, Union

import numpy as np
from scipy.linalg import solve_banded

__all__ = ["Diagonal", "Laplacian1D", "SpdOperator", "OperatorError", "operator_from_spec"]


class OperatorError(ValueError):
    pass


def _state(op, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (op.dim,):
        raise OperatorError(f"state has shape {v.shape}, operator dimension is {op.dim}")
    return v


@dataclass(frozen=True, eq=False)
class Diagonal:
    """Diagonal operator with strictly positive eigenvalues."""

    eigenvalues: np.ndarray = field(repr=False)

    def __post_init__(self):
        lam = np.array(self.eigenvalues, dtype=float).reshape(-1)
        if lam.size == 0:
            raise OperatorError("Diagonal operator needs at least one eigenvalue")
        if not np.all(np.isfinite(lam)) or np.any(lam <= 0.0):
            raise OperatorError("Diagonal eigenvalues must be finite and > 0")
        lam.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    def apply(self, v):
        return self.eigenvalues * _state(self, v)

    def solve_shifted(self, gamma: float, b):
        """Solve ``(I + gamma A) x = b``."""
        if gamma < 0:
            raise OperatorError("shift gamma must be >= 0")
        return _state(self, b) / (1.0 + gamma * self.eigenvalues)

    def inner(self, u, v) -> float:
        return float(np.dot(u, v))

    def norm(self, v) -> float:
        return float(np.linalg.norm(v))

    def norms(self, states) -> np.ndarray:
        return np.linalg.norm(np.asarray(states), axis=-1)

    def spectrum(self) -> np.ndarray:
        return self.eigenvalues.copy()

    def to_spec(self) -> dict:
        return {"operator": "diagonal", "eigenvalues": self.eigenvalues.tolist()}


@dataclass(frozen=True, eq=False)
class Laplacian1D:
    """Dirichlet Laplacian on ``m`` interior points of the unit interval.

    The inner product is the discrete L2 one, ``h * sum(u * v)``.
    """

    m: int

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise OperatorError("Laplacian1D needs m >= 1 interior points")
        object.__setattr__(self, "m", int(self.m))

    @property
    def dim(self) -> int:
        return self.m

    @property
    def h(self) -> float:
        return 1.0 / (self.m + 1)

    @property
    def nodes(self) -> np.ndarray:
        return self.h * np.arange(1, self.m + 1)

    def apply(self, v):
        v = _state(self, v)
        out = 2.0 * v
        out[1:] -= v[:-1]
        out[:-1] -= v[1:]
        return out / self.h**2

    def solve_shifted(self, gamma: float, b):
        """Solve ``(I + gamma A) x = b`` by banded LU (tridiagonal elimination)."""
        if gamma < 0:
            raise OperatorError("shift gamma must be >= 0")
        b = _state(self, b)
        if gamma == 0:
            return b.copy()
        return solve_banded((1, 1), _shifted_bands(self.m, float(gamma)), b,
                            check_finite=False)

    def inner(self, u, v) -> float:
        return self.h * float(np.dot(u, v))

    def norm(self, v) -> float:
        return math.sqrt(self.h) * float(np.linalg.norm(v))

    def norms(self, states) -> np.ndarray:
        return math.sqrt(self.h) * np.linalg.norm(np.asarray(states), axis=-1)

    def spectrum(self) -> np.ndarray:
        j = np.arange(1, self.m + 1)
        return 4.0 / self.h**2 * np.sin(j * math.pi * self.h / 2.0) ** 2

    def sine_mode(self, j: int = 1) -> np.ndarray:
        """Discrete eigenvector ``sin(j pi x_i)`` for eigenvalue ``spectrum()[j-1]``."""
        return np.sin(j * math.pi * self.nodes)

    def to_spec(self) -> dict:
        return {"operator": "laplacian1d", "m": self.m}


@lru_cache(maxsize=64)
def _shifted_bands(m: int, gamma: float) -> np.ndarray:
    h2 = (1.0 / (m + 1)) ** 2
    bands = np.empty((3, m))
    bands[0] = -gamma / h2
    bands[1] = 1.0 + 2.0 * gamma / h2
    bands[2] = -gamma / h2
    bands.setflags(write=False)
    return bands


SpdOperator = Union[Diagonal, Laplacian1D]


def operator_from_spec(spec: Mapping[str, Any]) -> SpdOperator:
    if not isinstance(spec, Mapping):
        raise OperatorError("operator spec must be an object")
    kind = spec.get("operator")
    if kind == "diagonal":
        if "eigenvalues" not in spec:
            raise OperatorError("diagonal operator needs 'eigenvalues'")
        return Diagonal(spec["eigenvalues"])
    if kind == "laplacian1d":
        if "m" not in spec:
            raise OperatorError("laplacian1d operator needs 'm'")
        return Laplacian1D(spec["m"])
    raise OperatorError(f"unknown operator {kind!r}")
