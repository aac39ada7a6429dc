"""Manufactured solutions, weighted long-time norms, order estimates and
stability-bound margins.

The weighted norm of a trajectory is step-indexed::

    ||U||_A = sqrt( sum_{n=n0}^{N} exp(-c n) ||U^n||^2 )

so the weight depends on the step number, not on ``t_n``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .forcing import DampedPolynomial, ProfileForcing
from .kernel import Abel, ExpSum, Kernel
from .operator import Diagonal, Laplacian1D, SpdOperator
from .stepper import History, Scheme, SchemeConfig, run
from .ztran import estimate_c_alpha

__all__ = [
    "HarnessError",
    "weighted_a_norm",
    "truncation_safe",
    "convolve_exact",
    "ManufacturedProblem",
    "OrderStudy",
    "estimate_order",
    "observed_orders",
    "default_horizon",
    "StabilityCheck",
    "stability_bound",
    "stability_margin",
    "trap_stability_constant",
    "cn_iq_error_terms",
    "RunReport",
]


class HarnessError(ValueError):
    pass


def _norms(history) -> np.ndarray:
    if isinstance(history, History):
        return history.norms
    return np.asarray(history, dtype=float)


def weighted_a_norm(history, c: float, skip_zero: bool = False) -> float:
    """``sqrt(sum_{n=n0}^N exp(-c n) ||U^n||^2)`` with ``n0 = 1`` if ``skip_zero``.

    ``history`` is a :class:`History` or the sequence of per-step norms.
    """
    if not c > 0:
        raise HarnessError("weight rate c must be > 0")
    norms = _norms(history)
    n = np.arange(norms.size)
    terms = np.exp(-c * n) * norms**2
    if skip_zero:
        terms = terms[1:]
    return math.sqrt(float(np.sum(terms)))


def truncation_safe(history, c: float) -> bool:
    """True when ``exp(-c N) max ||U^n||^2 < 1e-16 * total``, i.e. steps past ``N``
    could only matter through growth the run has not shown."""
    norms = _norms(history)
    total = float(np.sum(np.exp(-c * np.arange(norms.size)) * norms**2))
    if total == 0.0:
        return True
    N = norms.size - 1
    return math.exp(-c * N) * float(np.max(norms**2)) < 1e-16 * total


def convolve_exact(kernel: Kernel, profile: DampedPolynomial) -> Callable:
    """Closed form ``t -> (beta * g)(t)`` for a damped-polynomial profile."""
    if not isinstance(kernel, (Abel, ExpSum)):
        raise HarnessError(f"unsupported kernel {kernel!r}")
    if not isinstance(profile, DampedPolynomial):
        raise HarnessError("convolve_exact needs a DampedPolynomial profile")
    return lambda t: profile.kernel_convolution(kernel, t)


def _convolve_by_quadrature(kernel: Kernel, profile: DampedPolynomial, t: float) -> float:
    from scipy.integrate import quad

    if t == 0.0:
        return 0.0
    if isinstance(kernel, Abel):
        val, _ = quad(lambda s: float(profile(s)), 0.0, t, weight="alg",
                      wvar=(0.0, kernel.alpha - 1.0), epsabs=1e-14, epsrel=1e-13, limit=200)
        return val / math.gamma(kernel.alpha)
    val, _ = quad(lambda s: kernel.eval(t - s) * float(profile(s)), 0.0, t,
                  epsabs=1e-14, epsrel=1e-13, limit=200)
    return val


@dataclass(frozen=True, eq=False)
class ManufacturedProblem:
    """Exact solution ``u(t) = g(t) v`` with the forcing that produces it.

    ``v`` defaults to the first discrete sine mode for :class:`Laplacian1D`
    (an exact eigenvector, so no spatial error enters) and to the all-ones
    vector for :class:`Diagonal`.
    """

    kernel: Kernel
    operator: SpdOperator
    profile: DampedPolynomial
    mode: np.ndarray | None = None

    def __post_init__(self):
        if self.mode is None:
            if isinstance(self.operator, Laplacian1D):
                v = self.operator.sine_mode(1)
            else:
                v = np.ones(self.operator.dim)
        else:
            v = np.array(self.mode, dtype=float).reshape(-1)
        if v.shape != (self.operator.dim,):
            raise HarnessError("mode dimension does not match the operator")
        v.setflags(write=False)
        object.__setattr__(self, "mode", v)
        object.__setattr__(self, "_forcing",
                           ProfileForcing(self.kernel, self.profile, v, self.operator.apply(v)))

    @property
    def forcing(self) -> ProfileForcing:
        return self._forcing

    @property
    def u0(self) -> np.ndarray:
        return float(self.profile(0.0)) * self.mode

    def exact(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return self.profile(t)[:, None] * self.mode

    @property
    def zero_initial_slope(self) -> bool:
        """``u_t(0) = 0``."""
        return float(self.profile.derivative()(0.0)) == 0.0

    @property
    def meets_regularity(self) -> bool:
        """Whether ``t||A u_t|| + t^2 ||A u_tt|| <= C t^(alpha+1)`` near 0.

        For a smooth profile this reduces to ``g'(0) = 0`` because ``alpha < 1``.
        """
        return self.zero_initial_slope

    def residual(self, times: Sequence[float]) -> float:
        """Largest ``|f - u' - A u - beta * A u|`` at ``times`` (relative to ``||f||``),
        with the convolution done by adaptive quadrature instead of the closed form."""
        worst = 0.0
        Av = self.operator.apply(self.mode)
        dg = self.profile.derivative()
        for t in times:
            conv = _convolve_by_quadrature(self.kernel, self.profile, float(t))
            lhs = float(dg(t)) * self.mode + (float(self.profile(t)) + conv) * Av
            f = self.forcing.values([t])[0]
            scale = max(1.0, float(np.linalg.norm(f)))
            worst = max(worst, float(np.linalg.norm(f - lhs)) / scale)
        return worst

    def config(self, scheme, k: float, n_steps: int, **kw) -> SchemeConfig:
        return SchemeConfig(scheme=scheme, kernel=self.kernel, operator=self.operator,
                            k=k, n_steps=n_steps, u0=self.u0, forcing=self.forcing, **kw)

    def error_norms(self, history: History) -> np.ndarray:
        err = history.states - self.exact(history.times)
        return self.operator.norms(err)


def default_horizon(c: float) -> int:
    """Smallest step count after which ``exp(-c n)`` is below ``1e-20``."""
    return int(math.ceil(46.0 / c)) + 1


@dataclass
class OrderStudy:
    ks: list
    n_steps: int
    c: float
    errors: list
    max_errors: list
    orders: list
    histories: list = field(default_factory=list, repr=False)

    @property
    def max_orders(self) -> list:
        """Orders of the plain max-norm errors."""
        return observed_orders(self.ks, self.max_errors)


def estimate_order(problem: ManufacturedProblem, scheme, ks: Sequence[float], c: float = 0.5,
                   n_steps: int | None = None, skip_zero: bool = True,
                   keep_histories: bool = False, t_final: float | None = None,
                   **config_kw) -> OrderStudy:
    """Weighted-norm errors for each ``k`` and the observed orders ``log(E(k)/E(k'))/log(k/k')``.

    By default every run uses the same number of steps (:func:`default_horizon`)
    because the weight decays per step.  With ``t_final`` each run instead
    covers ``[0, t_final]``, which is the setting for the max-norm orders
    reported in ``max_errors``.
    """
    ks = [float(k) for k in ks]
    if len(ks) < 2:
        raise HarnessError("need at least two step sizes")
    if t_final is not None and n_steps is not None:
        raise HarnessError("give n_steps or t_final, not both")
    N = default_horizon(c) if n_steps is None else int(n_steps)
    errors, max_errors, hists = [], [], []
    for k in ks:
        if t_final is not None:
            N = max(1, int(math.ceil(t_final / k - 1e-9)))
        hist = run(problem.config(scheme, k, N, **config_kw))
        en = problem.error_norms(hist)
        errors.append(weighted_a_norm(en, c, skip_zero=skip_zero))
        max_errors.append(float(np.max(en)))
        if keep_histories:
            hists.append(hist)
    orders = observed_orders(ks, errors)
    return OrderStudy(ks, N, c, errors, max_errors, orders, hists)


def observed_orders(ks: Sequence[float], errors: Sequence[float]) -> list:
    """``log(E_i / E_{i+1}) / log(k_i / k_{i+1})`` for consecutive pairs."""
    return [math.log(errors[i] / errors[i + 1]) / math.log(ks[i] / ks[i + 1])
            for i in range(len(ks) - 1)]


# -- stability bounds ----------------------------------------------------------

@dataclass(frozen=True)
class StabilityCheck:
    """``lhs <= rhs`` in the form the bound is stated (squared or not)."""

    scheme: Scheme
    lhs: float
    rhs: float
    squared: bool
    calibration: float | None
    explicit: bool

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs


def trap_stability_constant(alpha: float, c: float, c_alpha: float | None = None) -> float:
    """The displayed constant ``C(alpha, c)`` of the trapezoidal-CQ stability bound."""
    if c_alpha is None:
        c_alpha = estimate_c_alpha(alpha, c / 2.0, kind="starting-sum")
    e = math.exp(c / 2.0)
    em = math.exp(-c / 2.0)
    front = (1.0 + e) ** 4 / (math.exp(c) * (e - 1.0) ** 2)
    inner = (1.0 + em) / (2.0**alpha * (1.0 - em) ** 2) + 2.0 * c_alpha / c
    return front * inner**2


def _weighted_forcing_sum(values: np.ndarray, norms_fn, c: float, start: int) -> float:
    norms = norms_fn(values)
    n = np.arange(start, start + norms.size)
    return float(np.sum(np.exp(-c * n / 2.0) * norms))


def stability_bound(history: History, c: float, calibration: float = 1.0,
                    c_alpha: float | None = None) -> StabilityCheck:
    """Evaluate the long-time stability bound that applies to the run's scheme.

    The Crank-Nicolson bounds for ``iq`` and ``cq-trap`` have every constant
    displayed and are compared in squared form.  The other three carry a
    generic constant, which is set to ``calibration``.
    """
    cfg = history.config
    A, k, N = cfg.operator, cfg.k, cfg.n_steps
    norms = history.norms
    n = np.arange(N + 1)
    u0 = np.asarray(cfg.u0)
    nu0 = A.norm(u0)
    nau0 = A.norm(A.apply(u0))
    f = cfg.forcing.values(k * n)
    fnorm = A.norms(f)
    scheme = cfg.scheme
    if scheme in (Scheme.CN_IQ, Scheme.CN_CQ_TRAP):
        lhs = float(np.sum(np.exp(-c * n[1:]) * norms[1:] ** 2))
        e = math.exp(c / 2.0)
        first = math.exp(c) * (1.0 + e) ** 4 / (e - 1.0) ** 6 * (k * fnorm[0] + 2.0 * nu0 + k * nau0) ** 2
        last = (1.0 + e) ** 4 * k**2 / (2.0 * (math.exp(c) - 1.0) ** 2) * float(
            np.sum(np.exp(-c * n / 2.0) * fnorm)) ** 2
        if scheme is Scheme.CN_IQ:
            beta = cfg.kernel.l1_norm()
            middle = beta**2 * (1.0 + e) ** 4 * k**2 / (math.exp(c) * (e - 1.0) ** 2) * nau0**2
        else:
            alpha = cfg.kernel.alpha
            middle = trap_stability_constant(alpha, c, c_alpha) * k ** (2.0 * (alpha + 1.0)) * nau0**2
        return StabilityCheck(scheme, lhs, first + middle + last, True, None, True)
    lhs = math.sqrt(float(np.sum(np.exp(-c * n[1:]) * norms[1:] ** 2)))
    if scheme is Scheme.CN_PI:
        sigma = cfg.forcing.averages(k, N)
        s_sum = float(np.sum(np.exp(-c * n[1:] / 2.0) * A.norms(sigma)))
        inner = nu0 + k * nau0 + k * s_sum
    else:
        f_sum = float(np.sum(np.exp(-c * n[1:] / 2.0) * fnorm[1:]))
        if scheme is Scheme.BDF2_IQ:
            mem = cfg.kernel.l1_norm() * k
        else:
            mem = k ** (cfg.kernel.alpha + 1.0)
        inner = k * f_sum + math.exp(-c / 2.0) * (mem * nau0 + nu0)
    return StabilityCheck(scheme, lhs, calibration * inner, False, calibration, False)


def stability_margin(history: History, c: float, calibration: float = 1.0,
                     c_alpha: float | None = None) -> float:
    """``rhs - lhs`` of :func:`stability_bound`."""
    return stability_bound(history, c, calibration, c_alpha).margin


def cn_iq_error_terms(problem: ManufacturedProblem, k: float, n_steps: int, c: float) -> float:
    """Bracketed factor of the CN-IQ error bound times ``k``; the generic
    constant in front is left out so it can be calibrated once."""
    from scipy.integrate import quad

    if not isinstance(problem.kernel, ExpSum):
        raise HarnessError("the CN-IQ error bound needs an expsum kernel")
    A = problem.operator
    v = problem.mode
    nv, nav = A.norm(v), A.norm(A.apply(v))
    d1, d2, d3 = (problem.profile.derivative(j) for j in (1, 2, 3))

    def integral(fn, a, b):
        return quad(lambda s: abs(float(fn(s))), a, b, epsabs=1e-15, limit=200)[0]

    N = int(n_steps)
    w = np.exp(-0.5 * c * np.arange(N + 1))
    head = math.exp(-c / 2.0) * integral(d2, 0.0, k) * nv
    per_step3 = np.array([integral(d3, (j - 1) * k, j * k) for j in range(2, N + 1)])
    third = 0.5 * k * float(np.sum(w[2:] * per_step3)) * nv
    per_step2 = np.array([integral(d2, (j - 1) * k, j * k) for j in range(2, N + 1)])
    cum2 = np.concatenate(([0.0], np.cumsum(per_step2)))  # int_k^{t_n} for n = 1..N
    first_slope = integral(d1, 0.0, k)
    mem = problem.kernel.l1_norm() * float(np.sum(w[1:] * (2.0 * first_slope + k * cum2))) * nav
    return k * (head + third + mem)


@dataclass
class RunReport:
    """One row of a convergence suite."""

    scheme: str
    alpha: float | None
    k: float
    n_steps: int
    c: float
    a_norm_error: float
    order: float | None
    margin: float
    constraint_ok: bool | None
    max_error: float = float("nan")
    explicit: bool = False

    def __post_init__(self):
        if not self.a_norm_error >= 0:
            raise HarnessError("a_norm_error must be >= 0")
        if self.order is not None and not math.isfinite(self.order):
            raise HarnessError("order estimate must be finite")

    def row(self) -> list:
        return [self.scheme, self.alpha, self.k, self.n_steps, self.c, self.a_norm_error,
                self.order, self.margin, self.constraint_ok]
