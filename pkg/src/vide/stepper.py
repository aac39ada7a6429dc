"""Time-marching schemes on a uniform grid ``t_n = n k``.

==============  =====================================  ===========
scheme          time discretisation                    memory rule
==============  =====================================  ===========
``cn-iq``       Crank-Nicolson                         iq
``cn-cq-trap``  Crank-Nicolson                         cq-trap
``cn-pi``       Crank-Nicolson, interval-mean forcing  pi
``bdf2-iq``     backward Euler start, then BDF2        iq
``bdf2-cq``     backward Euler start, then BDF2        cq-bdf2
==============  =====================================  ===========

Every step solves one shifted system ``(I + gamma A) U^n = rhs``; the
history part of the memory term is an O(n) sum, so a run costs O(N^2).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from . import _backend
from .forcing import ZeroForcing
from .kernel import Abel, ExpSum, Kernel
from .operator import SpdOperator
from .quadrature import Rule, WeightTable, build_table
from .ztran import estimate_c_alpha

__all__ = [
    "Scheme",
    "SchemeConfig",
    "History",
    "SchemeError",
    "SolverDivergence",
    "StepConstraintWarning",
    "run",
    "run_cn",
    "run_cn_pi",
    "run_bdf2",
    "step_constraint",
    "MAX_STEPS",
]

MAX_STEPS = 200_000


class SchemeError(ValueError):
    """Invalid scheme configuration (pairing, grid, initial data)."""


class SolverDivergence(FloatingPointError):
    """A step produced NaN or Inf."""


class StepConstraintWarning(UserWarning):
    pass


class Scheme(str, Enum):
    CN_IQ = "cn-iq"
    CN_CQ_TRAP = "cn-cq-trap"
    CN_PI = "cn-pi"
    BDF2_IQ = "bdf2-iq"
    BDF2_CQ = "bdf2-cq"

    @property
    def rule(self) -> Rule:
        return _RULES[self]

    @property
    def needs_abel(self) -> bool:
        return self not in (Scheme.CN_IQ, Scheme.BDF2_IQ)


_RULES = {
    Scheme.CN_IQ: Rule.IQ,
    Scheme.CN_CQ_TRAP: Rule.CQ_TRAP,
    Scheme.CN_PI: Rule.PI,
    Scheme.BDF2_IQ: Rule.IQ,
    Scheme.BDF2_CQ: Rule.CQ_BDF2,
}


@dataclass(frozen=True, eq=False)
class SchemeConfig:
    """Everything a run needs.

    ``forcing`` must provide ``values(t)`` and, for ``cn-pi``, ``averages(k, n)``.
    ``forcing_mode`` picks ``(f^n + f^{n-1})/2`` ("average") or
    ``f(t_{n-1/2})`` ("midpoint") for the Crank-Nicolson right-hand side.
    ``s0`` is the exponent used by the step-size gate of ``cn-pi``.
    """

    scheme: Scheme
    kernel: Kernel
    operator: SpdOperator
    k: float
    n_steps: int
    u0: np.ndarray
    forcing: Any = None
    s0: float = 0.25
    forcing_mode: str = "average"
    literal_bdf2_start: bool = False

    def __post_init__(self):
        try:
            scheme = Scheme(self.scheme)
        except ValueError as exc:
            raise SchemeError(f"unknown scheme {self.scheme!r}") from exc
        object.__setattr__(self, "scheme", scheme)
        errors = validate_pairing(scheme, self.kernel)
        k = float(self.k)
        if not math.isfinite(k) or k <= 0:
            errors.append(f"time step k must be positive and finite, got {self.k!r}")
        if int(self.n_steps) != self.n_steps or not 1 <= self.n_steps <= MAX_STEPS:
            errors.append(f"n_steps must be an integer in [1, {MAX_STEPS}], got {self.n_steps!r}")
        u0 = np.array(self.u0, dtype=float).reshape(-1)
        if u0.shape != (self.operator.dim,):
            errors.append(f"u0 has {u0.size} entries, operator dimension is {self.operator.dim}")
        elif not np.all(np.isfinite(u0)):
            errors.append("u0 must be finite")
        if self.forcing_mode not in ("average", "midpoint"):
            errors.append(f"forcing_mode must be 'average' or 'midpoint', got {self.forcing_mode!r}")
        if not math.isfinite(self.s0) or self.s0 <= 0:
            errors.append("s0 must be positive")
        if errors:
            raise SchemeError("; ".join(errors))
        forcing = self.forcing if self.forcing is not None else ZeroForcing(self.operator.dim)
        object.__setattr__(self, "forcing", forcing)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "n_steps", int(self.n_steps))
        u0.setflags(write=False)
        object.__setattr__(self, "u0", u0)

    def replace(self, **changes) -> "SchemeConfig":
        fields = {name: getattr(self, name) for name in self.__dataclass_fields__}
        fields.update(changes)
        return SchemeConfig(**fields)

    def table(self) -> WeightTable:
        kw = {"literal_start": True} if (self.literal_bdf2_start
                                         and self.scheme is Scheme.BDF2_CQ) else {}
        return build_table(self.scheme.rule, self.k, self.n_steps, kernel=self.kernel, **kw)


def validate_pairing(scheme: Scheme, kernel: Kernel) -> list[str]:
    if scheme.needs_abel and not isinstance(kernel, Abel):
        return [f"scheme {scheme.value} needs an Abel kernel"]
    if not scheme.needs_abel and not isinstance(kernel, ExpSum):
        return [f"scheme {scheme.value} needs an integrable (expsum) kernel"]
    return []


@dataclass(eq=False)
class History:
    """Trajectory ``U^0..U^N`` and per-step norms."""

    config: SchemeConfig
    states: np.ndarray
    norms: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def k(self) -> float:
        return self.config.k

    @property
    def n_steps(self) -> int:
        return self.config.n_steps

    @property
    def times(self) -> np.ndarray:
        return self.config.k * np.arange(self.config.n_steps + 1)


def step_constraint(alpha: float, k: float, s0: float, c_alpha: float) -> tuple[bool, float]:
    """Return ``(k**alpha <= bound, bound)`` with ``bound = s0 Gamma(alpha+2)/(s0 + c_alpha)``."""
    bound = s0 * math.gamma(alpha + 2.0) / (s0 + c_alpha)
    return k**alpha <= bound, bound


def _check_step(U, n):
    if not np.all(np.isfinite(U)):
        raise SolverDivergence(f"non-finite state at step {n}")


def _setup(config: SchemeConfig):
    N, d = config.n_steps, config.operator.dim
    U = np.empty((N + 1, d))
    phi = np.empty((N + 1, d))
    U[0] = config.u0
    phi[0] = config.operator.apply(config.u0)
    return U, phi


def _finish(config, U, diagnostics):
    return History(config, U, config.operator.norms(U), diagnostics)


def _cn_forcing(config: SchemeConfig) -> np.ndarray:
    k, N = config.k, config.n_steps
    if config.forcing_mode == "midpoint":
        return config.forcing.values(k * (np.arange(1, N + 1) - 0.5))
    f = config.forcing.values(k * np.arange(N + 1))
    return 0.5 * (f[1:] + f[:-1])


def run_cn(config: SchemeConfig) -> History:
    """Crank-Nicolson with the ``iq`` or ``cq-trap`` memory rule."""
    if config.scheme not in (Scheme.CN_IQ, Scheme.CN_CQ_TRAP):
        raise SchemeError(f"run_cn cannot run {config.scheme.value}")
    A, k, N = config.operator, config.k, config.n_steps
    table = config.table()
    eff = np.ascontiguousarray(table.effective)
    start = np.array([0.0] + [table.half_start(n) for n in range(1, N + 1)])
    fhalf = _cn_forcing(config)
    U, phi = _setup(config)
    mid = np.zeros_like(phi)
    gamma = 0.5 * k * (1.0 + eff[0])
    history_sum = _backend.history_sum
    for n in range(1, N + 1):
        known = start[n] * phi[0] + history_sum(eff, mid, n, n - 1) + 0.5 * eff[0] * phi[n - 1]
        rhs = U[n - 1] - 0.5 * k * phi[n - 1] - k * known + k * fhalf[n - 1]
        U[n] = A.solve_shifted(gamma, rhs)
        _check_step(U[n], n)
        phi[n] = A.apply(U[n])
        mid[n] = 0.5 * (phi[n] + phi[n - 1])
    diagnostics = {"q0": float(eff[0]), "start_half_1": float(start[1])}
    if table.rule is Rule.IQ:
        diagnostics["chi_tilde_1_negative"] = bool(start[1] < 0)
    return _finish(config, U, diagnostics)


def run_cn_pi(config: SchemeConfig) -> History:
    """Crank-Nicolson with product integration and interval-mean forcing."""
    if config.scheme is not Scheme.CN_PI:
        raise SchemeError(f"run_cn_pi cannot run {config.scheme.value}")
    A, k, N = config.operator, config.k, config.n_steps
    alpha = config.kernel.alpha
    table = config.table()
    w = np.ascontiguousarray(table.w)
    sigma = config.forcing.averages(k, N)
    diagnostics = {"q0": float(w[0])}
    if alpha < 1.0:
        c_alpha = estimate_c_alpha(alpha, config.s0, kind="gate")
        ok, bound = step_constraint(alpha, k, config.s0, c_alpha)
        diagnostics.update(c_alpha=c_alpha, step_bound=bound, constraint_ok=ok)
        if not ok:
            warnings.warn(
                f"k^alpha = {k**alpha:.4g} exceeds the step bound {bound:.4g} "
                f"(s0={config.s0}, C_alpha={c_alpha:.4g})",
                StepConstraintWarning,
                stacklevel=2,
            )
    U, phi = _setup(config)
    mid = np.zeros_like(phi)
    history_sum = _backend.history_sum

    # first step: Q_{1/2}(phi) = w_0 phi^1
    rhs = U[0] - 0.5 * k * phi[0] + k * sigma[0]
    U[1] = A.solve_shifted(k * (0.5 + w[0]), rhs)
    _check_step(U[1], 1)
    phi[1] = A.apply(U[1])
    mid[1] = 0.5 * (phi[1] + phi[0])

    gamma = k * (0.5 + 0.5 * w[0])
    jump = phi[1] - phi[0]
    for n in range(2, N + 1):
        known = (0.5 * w[n - 1] * jump + history_sum(w, mid, n, n - 1)
                 + 0.5 * w[0] * phi[n - 1])
        rhs = U[n - 1] - 0.5 * k * phi[n - 1] - k * known + k * sigma[n - 1]
        U[n] = A.solve_shifted(gamma, rhs)
        _check_step(U[n], n)
        phi[n] = A.apply(U[n])
        mid[n] = 0.5 * (phi[n] + phi[n - 1])
    return _finish(config, U, diagnostics)


def run_bdf2(config: SchemeConfig) -> History:
    """Backward Euler first step, BDF2 afterwards, memory at full steps."""
    if config.scheme not in (Scheme.BDF2_IQ, Scheme.BDF2_CQ):
        raise SchemeError(f"run_bdf2 cannot run {config.scheme.value}")
    A, k, N = config.operator, config.k, config.n_steps
    table = config.table()
    eff = np.ascontiguousarray(table.effective)
    start = table.starting
    f = config.forcing.values(k * np.arange(N + 1))
    U, phi = _setup(config)
    history_sum = _backend.history_sum

    rhs = U[0] - k * start[1] * phi[0] + k * f[1]
    U[1] = A.solve_shifted(k * (1.0 + eff[0]), rhs)
    _check_step(U[1], 1)
    phi[1] = A.apply(U[1])

    gamma = 2.0 * k * (1.0 + eff[0]) / 3.0
    for n in range(2, N + 1):
        known = start[n] * phi[0] + history_sum(eff, phi, n, n - 1)
        rhs = (2.0 * U[n - 1] - 0.5 * U[n - 2] - k * known + k * f[n]) * (2.0 / 3.0)
        U[n] = A.solve_shifted(gamma, rhs)
        _check_step(U[n], n)
        phi[n] = A.apply(U[n])
    return _finish(config, U, {"q0": float(eff[0])})


_RUNNERS = {
    Scheme.CN_IQ: run_cn,
    Scheme.CN_CQ_TRAP: run_cn,
    Scheme.CN_PI: run_cn_pi,
    Scheme.BDF2_IQ: run_bdf2,
    Scheme.BDF2_CQ: run_bdf2,
}


def run(config: SchemeConfig) -> History:
    """Dispatch on ``config.scheme``."""
    return _RUNNERS[config.scheme](config)
