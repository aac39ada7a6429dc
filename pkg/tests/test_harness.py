import math

import numpy as np
import pytest

from vide.forcing import DampedPolynomial, ExpForcing
from vide.harness import (
    HarnessError,
    ManufacturedProblem,
    RunReport,
    cn_iq_error_terms,
    convolve_exact,
    default_horizon,
    estimate_order,
    stability_bound,
    stability_margin,
    trap_stability_constant,
    truncation_safe,
    weighted_a_norm,
)
from vide.kernel import Abel, ExpSum
from vide.operator import Diagonal, Laplacian1D
from vide.stepper import Scheme, SchemeConfig, run
from vide.ztran import estimate_c_alpha

KS = [1 / 8, 1 / 16, 1 / 32, 1 / 64]
SMOOTH = DampedPolynomial.quadratic(1, 1, 1, 1)  # g'(0) = 0


# -- weighted norm -------------------------------------------------------------

def test_weighted_norm_geometric_limit():
    c = 0.5
    norms = np.ones(2000)
    assert weighted_a_norm(norms, c, skip_zero=True) == pytest.approx(
        math.sqrt(math.exp(-c) / (1 - math.exp(-c))), rel=1e-14)
    assert weighted_a_norm(norms, c) == pytest.approx(math.sqrt(1 / (1 - math.exp(-c))), rel=1e-14)
    assert truncation_safe(norms, c)
    assert not truncation_safe(np.ones(20), c)


def test_weighted_norm_zero_and_random():
    assert weighted_a_norm(np.zeros(50), 1.0) == 0.0
    rng = np.random.default_rng(7)
    norms = rng.uniform(0, 3, 300)
    c = 0.37
    for skip in (False, True):
        total = 0.0
        for n in range(1 if skip else 0, norms.size):
            total += math.exp(-c * n) * norms[n] ** 2
        assert weighted_a_norm(norms, c, skip) == pytest.approx(math.sqrt(total), rel=1e-14)


def test_weighted_norm_rejects_c():
    with pytest.raises(HarnessError):
        weighted_a_norm([1.0], 0.0)


def test_default_horizon():
    assert default_horizon(0.5) == 93
    assert math.exp(-0.5 * 92) < 1e-19


# -- manufactured problems -----------------------------------------------------

def test_convolve_exact_examples():
    t = np.array([0.5, 1.0, 2.0])
    f = convolve_exact(Abel(0.3), DampedPolynomial((0, 0, 1)))
    assert np.allclose(f(t), 2 * t**2.3 / math.gamma(3.3), rtol=1e-14)
    one = convolve_exact(Abel(0.3), DampedPolynomial.constant(1.0))
    assert np.allclose(one(t), Abel(0.3).cumulative(t), rtol=1e-14)
    e = convolve_exact(Abel(0.5), DampedPolynomial((1.0,), 1.0))
    assert e(1.0)[0] == pytest.approx(0.60715770584139372912, abs=1e-10)
    with pytest.raises(HarnessError):
        convolve_exact(Abel(0.5), lambda t: t)


@pytest.mark.parametrize("kernel", [Abel(0.2), Abel(0.5), Abel(0.9), Abel(1.0),
                                    ExpSum(((1.0, 1.0),)), ExpSum(((2.0, 0.3), (0.5, 7.0)))])
@pytest.mark.parametrize("profile", [SMOOTH, DampedPolynomial.quadratic(1, 0, 1, 1),
                                     DampedPolynomial((0.5, -1.0, 0.0, 0.25), 0.0)])
def test_manufactured_residual(kernel, profile):
    times = np.random.default_rng(11).uniform(0.01, 10, 20)
    for op in (Diagonal([1.0, 3.0]), Laplacian1D(7)):
        assert ManufacturedProblem(kernel, op, profile).residual(times) <= 1e-8


def test_regularity_flags():
    p = ManufacturedProblem(Abel(0.5), Diagonal([1.0]), SMOOTH)
    assert p.zero_initial_slope and p.meets_regularity
    q = ManufacturedProblem(Abel(0.5), Diagonal([1.0]), DampedPolynomial.quadratic(1, 0, 1, 1))
    assert not q.zero_initial_slope and not q.meets_regularity


def test_laplacian_problem_uses_sine_mode():
    op = Laplacian1D(9)
    p = ManufacturedProblem(Abel(0.5), op, SMOOTH)
    assert np.allclose(p.u0, op.sine_mode(1))
    assert np.allclose(p.exact([0.0, 1.0])[1], SMOOTH(1.0) * op.sine_mode(1))


# -- orders --------------------------------------------------------------------

def test_pure_crank_nicolson_order():
    p = ManufacturedProblem(ExpSum(((1e-14, 1.0),)), Diagonal([1.0]), SMOOTH)
    fixed_time = estimate_order(p, Scheme.CN_IQ, KS, t_final=8.0)
    assert all(abs(o - 2.0) <= 0.05 for o in fixed_time.max_orders)
    weighted = estimate_order(p, Scheme.CN_IQ, KS)
    # the step-indexed weight keeps about 90 steps, a window of length ~90 k,
    # so the weighted error falls faster than k^2
    assert all(o >= 1.95 for o in weighted.orders)


@pytest.mark.parametrize("scheme,kernel", [(Scheme.CN_IQ, ExpSum(((1.0, 1.0),))),
                                           (Scheme.BDF2_IQ, ExpSum(((1.0, 1.0),))),
                                           (Scheme.CN_PI, Abel(0.5)),
                                           (Scheme.CN_CQ_TRAP, Abel(0.5)),
                                           (Scheme.BDF2_CQ, Abel(0.5))],
                         ids=lambda x: x.value if isinstance(x, Scheme) else "")
def test_halving_k_never_increases_error(scheme, kernel):
    p = ManufacturedProblem(kernel, Diagonal([1.0]), SMOOTH)
    study = estimate_order(p, scheme, KS)
    assert all(a > b for a, b in zip(study.errors, study.errors[1:]))


def test_estimate_order_validation():
    p = ManufacturedProblem(Abel(0.5), Diagonal([1.0]), SMOOTH)
    with pytest.raises(HarnessError):
        estimate_order(p, Scheme.CN_PI, [0.1])
    with pytest.raises(HarnessError):
        estimate_order(p, Scheme.CN_PI, [0.1, 0.05], n_steps=10, t_final=1.0)


def test_cn_iq_error_bound_scaling():
    p = ManufacturedProblem(ExpSum(((1.0, 1.0),)), Diagonal([1.0]), DampedPolynomial.quadratic(1, 0, 1, 1))
    c = 0.5
    ks = KS[:3]
    study = estimate_order(p, Scheme.CN_IQ, ks, c=c)
    terms = [cn_iq_error_terms(p, k, study.n_steps, c) for k in ks]
    calibration = study.errors[0] / terms[0]
    for err, bound in zip(study.errors[1:], terms[1:]):
        assert err <= calibration * bound


# -- stability bounds ----------------------------------------------------------

def test_margin_zero_data():
    cfg = SchemeConfig(Scheme.CN_IQ, ExpSum(((1.0, 1.0),)), Diagonal([1.0]), 0.1, 50, [0.0])
    check = stability_bound(run(cfg), 1.0)
    assert check.lhs == 0.0 and check.rhs == 0.0 and check.margin == 0.0
    assert check.explicit and check.squared


@pytest.mark.parametrize("seed", range(5))
def test_cn_iq_explicit_bound_holds(seed):
    rng = np.random.default_rng(seed)
    dim = 3
    terms = tuple((float(rng.uniform(0.1, 2)), float(rng.uniform(0.1, 5))) for _ in range(2))
    op = Diagonal(rng.uniform(0.1, 10, dim))
    f = ExpForcing(rng.standard_normal(dim), float(rng.uniform(0.1, 2)))
    cfg = SchemeConfig(Scheme.CN_IQ, ExpSum(terms), op, 0.1, 500, rng.standard_normal(dim), f)
    assert stability_margin(run(cfg), 1.0) >= 0


def test_trap_constant_display():
    alpha, c, ca = 0.5, 1.0, 0.3
    e, em = math.exp(c / 2), math.exp(-c / 2)
    expect = ((1 + e) ** 4 / (math.exp(c) * (e - 1) ** 2)
              * ((1 + em) / (2**alpha * (1 - em) ** 2) + 2 * ca / c) ** 2)
    assert trap_stability_constant(alpha, c, ca) == pytest.approx(expect, rel=1e-14)
    default = trap_stability_constant(alpha, c)
    assert default == pytest.approx(
        trap_stability_constant(alpha, c, estimate_c_alpha(alpha, c / 2, kind="starting-sum")))


def test_trap_bound_holds():
    cfg = SchemeConfig(Scheme.CN_CQ_TRAP, Abel(0.5), Diagonal([1.0, 4.0]), 0.05, 400, [1.0, -1.0],
                       ExpForcing([1.0, 0.5], 0.5))
    check = stability_bound(run(cfg), 1.0)
    assert check.explicit and check.margin >= 0


@pytest.mark.parametrize("scheme,kernel", [(Scheme.CN_PI, Abel(0.5)), (Scheme.BDF2_IQ, ExpSum(((1, 1),))),
                                           (Scheme.BDF2_CQ, Abel(0.5))],
                         ids=lambda x: x.value if isinstance(x, Scheme) else "")
def test_calibrated_bounds_are_flagged(scheme, kernel):
    cfg = SchemeConfig(scheme, kernel, Diagonal([1.0]), 0.05, 100, [1.0], ExpForcing([1.0], 1.0))
    hist = run(cfg)
    one = stability_bound(hist, 1.0)
    two = stability_bound(hist, 1.0, calibration=2.0)
    assert not one.explicit and one.calibration == 1.0
    assert two.rhs == pytest.approx(2 * one.rhs) and two.lhs == one.lhs


def test_run_report_validation():
    rep = RunReport("cn-pi", 0.5, 0.1, 93, 0.5, 1e-3, 2.0, 0.1, True)
    assert rep.row() == ["cn-pi", 0.5, 0.1, 93, 0.5, 1e-3, 2.0, 0.1, True]
    with pytest.raises(HarnessError):
        RunReport("cn-pi", 0.5, 0.1, 93, 0.5, -1.0, None, 0.0, None)
    with pytest.raises(HarnessError):
        RunReport("cn-pi", 0.5, 0.1, 93, 0.5, 1.0, float("inf"), 0.0, None)
