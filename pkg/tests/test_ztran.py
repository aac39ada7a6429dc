import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vide.kernel import ExpSum
from vide.quadrature import build_cq_bdf2, build_cq_trap, build_iq, build_pi
from vide.ztran import (
    ZTransformError,
    bdf2_cq_symbol,
    bdf2_symbol,
    cn_symbol,
    estimate_c_alpha,
    gen_eval,
    inverse_z,
    inverse_z_all,
    iq_symbol,
    positivity_scan,
    quadratic_form_check,
    trap_symbol,
)


def _families(alpha=0.5, k=0.1, n_max=2000):
    """(name, weights, tail decay power) for every shipped weight family."""
    return [
        ("iq", build_iq(ExpSum(((1.0, 1.0),)), k, n_max).w, 0.0),
        ("cq-trap", build_cq_trap(alpha, k, n_max).w, alpha - 1.0),
        ("cq-bdf2", build_cq_bdf2(alpha, k, n_max).w, alpha - 1.0),
        ("pi", build_pi(alpha, k, n_max).w, alpha - 1.0),
    ]


# -- gen_eval ------------------------------------------------------------------

def test_gen_eval_unit_impulse():
    w = np.zeros(10)
    w[0] = 1.0
    for z in (1.01, 3.0 + 4.0j, -2.0):
        val, tail = gen_eval(w, z)
        assert val == 1.0 and tail == 0.0


def test_gen_eval_geometric():
    r, z = 0.9, 1.5
    w = r ** np.arange(60)
    val, tail = gen_eval(w, z)
    assert abs(val - z / (z - r)) <= tail
    assert tail > 0


def test_gen_eval_trap_closed_form():
    z = math.exp(0.5)
    exact = (2 * (1 - 1 / z) / (1 + 1 / z)) ** -0.5
    for n_max in (10, 40, 400):
        val, tail = gen_eval(build_cq_trap(0.5, 0.1, n_max).w, z, decay_power=-0.5)
        assert abs(val - exact) <= tail + 1e-15


def test_gen_eval_rejects_unit_disc():
    with pytest.raises(ZTransformError):
        gen_eval([1.0, 2.0], 1.0)
    with pytest.raises(ZTransformError):
        gen_eval([1.0, 2.0], np.array([2.0, 0.5j]))


# -- positivity ----------------------------------------------------------------

def test_scan_examples():
    iq = build_iq(ExpSum(((1.0, 1.0),)), 0.1, 2000).w
    assert positivity_scan(iq, 0.1).passed
    bdf = build_cq_bdf2(0.5, 0.1, 2000).w
    scan = positivity_scan(bdf, 0.05, decay_power=-0.5)
    assert scan.passed and scan.verdict == "pass"
    neg = positivity_scan(-bdf, 0.05, decay_power=-0.5)
    assert not neg.passed and neg.min_real_part < 0 and neg.verdict == "fail"
    assert 0 <= neg.argmin_angle < 2 * math.pi


@pytest.mark.parametrize("s0", [0.05, 0.5])
def test_scan_and_quadratic_form_agree(s0):
    for name, w, p in _families():
        for sign in (1.0, -1.0):
            scan = positivity_scan(sign * w, s0, 4096, p)
            qf = quadratic_form_check(sign * w, trials=200, length=64)
            assert scan.passed == (sign > 0), name
            assert (qf >= -1e-12) == scan.passed, name


def test_scan_min_is_sampled_minimum():
    w = build_pi(0.5, 0.1, 300).w
    scan = positivity_scan(w, 0.3, samples=512, decay_power=-0.5)
    eta = 2 * math.pi * np.arange(512) / 512
    vals, _ = gen_eval(w, np.exp(0.3 + 1j * eta))
    assert scan.min_real_part == pytest.approx(float(np.min(vals.real)), abs=1e-12)
    assert scan.argmin_angle == pytest.approx(eta[np.argmin(vals.real)])


def test_scan_validation():
    with pytest.raises(ZTransformError):
        positivity_scan([1.0], 0.1, samples=100)
    with pytest.raises(ZTransformError):
        positivity_scan([1.0], 0.0)


def test_quadratic_form_examples():
    assert quadratic_form_check([1.0], trials=100, length=8) >= 0
    assert quadratic_form_check(build_pi(0.5, 0.1, 100).w, trials=1000) >= -1e-12
    # V = (1, 1)/sqrt(2) gives (1 + (-3 + 1))/2 = -1/2
    assert quadratic_form_check([1.0, -3.0], trials=10, length=2) <= -0.5 + 1e-12
    with pytest.raises(ZTransformError):
        quadratic_form_check([1.0], length=0)


@settings(max_examples=50, deadline=None)
@given(s0=st.floats(0.01, 3.0), eta=st.floats(0, 2 * math.pi))
def test_cn_and_bdf2_symbol_lower_bounds(s0, eta):
    z = np.exp(s0 + 1j * eta)
    assert cn_symbol(z).real >= 2 * (math.exp(2 * s0) - 1) / (1 + math.exp(s0)) ** 2 - 1e-12
    assert bdf2_symbol(z).real >= (1 - math.exp(-2 * s0)) / 2 - 1e-12


def test_symbol_bounds_on_full_circle():
    for s0 in (0.05, 0.25, 1.0):
        z = np.exp(s0 + 2j * math.pi * np.arange(4096) / 4096)
        assert np.min(cn_symbol(z).real) >= 2 * (math.exp(2 * s0) - 1) / (1 + math.exp(s0)) ** 2 - 1e-12
        assert np.min(bdf2_symbol(z).real) >= (1 - math.exp(-2 * s0)) / 2 - 1e-12


# -- inverse transform ---------------------------------------------------------

def test_inverse_of_constant():
    one = lambda z: np.ones_like(z)
    assert inverse_z(one, 0) == pytest.approx(1.0, abs=1e-14)
    for m in (1, 5, 31):
        assert inverse_z(one, m) == pytest.approx(0.0, abs=1e-12)


def test_inverse_alpha_one_symbols():
    assert inverse_z(trap_symbol(1.0), 3) == pytest.approx(1.0, abs=1e-10)
    assert inverse_z(bdf2_cq_symbol(1.0), 1, radius=1.5, nodes=1024) == pytest.approx(8 / 9, abs=1e-10)


@pytest.mark.parametrize("alpha", [0.5, 0.75])
def test_inverse_recovers_cq_weights(alpha):
    for gen, w in ((trap_symbol(alpha), build_cq_trap(alpha, 0.1, 32).w),
                   (bdf2_cq_symbol(alpha), build_cq_bdf2(alpha, 0.1, 32).w)):
        got = inverse_z_all(gen, 32)
        assert np.max(np.abs(got - w)) <= 1e-8
        assert inverse_z(gen, 17) == pytest.approx(w[17], abs=1e-8)


def test_inverse_recovers_iq_weights():
    kernel = ExpSum(((1.0, 1.0), (0.5, 4.0)))
    w = build_iq(kernel, 0.2, 32).w
    assert np.max(np.abs(inverse_z_all(iq_symbol(kernel, 0.2), 32) - w)) <= 1e-8


@pytest.mark.parametrize("name,w,p", _families(n_max=1500), ids=lambda x: x if isinstance(x, str) else "")
def test_round_trip_through_gen_eval(name, w, p):
    got = inverse_z_all(lambda z: gen_eval(w, z, p)[0], 32)
    assert np.max(np.abs(got - w[:33])) <= 1e-8


def test_inverse_validation():
    with pytest.raises(ZTransformError):
        inverse_z(lambda z: z, 0, nodes=1000)
    with pytest.raises(ZTransformError):
        inverse_z(lambda z: z, 0, radius=1.0)


# -- C_alpha surrogates ----------------------------------------------------------

@pytest.mark.parametrize("kind", ["starting", "starting-sum", "gate"])
def test_c_alpha_positive_and_k_invariant(kind):
    a = estimate_c_alpha(0.5, 0.25, n_max=1000, k=0.1, kind=kind)
    b = estimate_c_alpha(0.5, 0.25, n_max=1000, k=0.05, kind=kind)
    assert math.isfinite(a) and a > 0
    assert abs(a - b) <= 0.1 * a


@pytest.mark.parametrize("kind", ["starting", "starting-sum", "gate"])
def test_c_alpha_continuous_near_one(kind):
    vals = [estimate_c_alpha(a, 0.25, kind=kind) for a in (0.94, 0.95, 0.96)]
    assert all(math.isfinite(v) for v in vals)
    assert abs(vals[1] - 0.5 * (vals[0] + vals[2])) <= 0.05 * max(abs(v) for v in vals)


def test_c_alpha_rejects_alpha_one():
    with pytest.raises(ZTransformError):
        estimate_c_alpha(1.0)
    with pytest.raises(ZTransformError):
        estimate_c_alpha(0.5, kind="other")


def test_gate_matches_weight_sum():
    # the gate k^a <= s0 G(a+2)/(s0+C) is the same statement as sum w_n e^{-n s0} <= 1
    alpha, s0 = 0.5, 0.25
    c_alpha = estimate_c_alpha(alpha, s0, kind="gate")
    for k in (1 / 8, 0.2, 0.3):
        w = build_pi(alpha, k, 4000).w
        total = float(np.sum(w * np.exp(-s0 * np.arange(w.size))))
        gate = k**alpha <= s0 * math.gamma(alpha + 2) / (s0 + c_alpha)
        assert gate == (total <= 1.0)
