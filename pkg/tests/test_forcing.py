import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from vide.forcing import (
    DampedPolynomial,
    ExpForcing,
    ForcingError,
    ProfileForcing,
    ZeroForcing,
    forcing_from_spec,
    profile_from_spec,
    scaled_kummer,
)
from vide.kernel import Abel, ExpSum


@pytest.mark.parametrize("a,b,x", [(0.5, 1.5, 0.3), (0.5, 3.5, 12.0), (1.0, 2.0, 40.0),
                                   (0.3, 2.3, 499.0), (0.3, 2.3, 501.0), (0.9, 3.9, 4000.0)])
def test_scaled_kummer_against_mpmath(a, b, x):
    mp.mp.dps = 30
    ref = float(mp.exp(-x) * mp.hyp1f1(a, b, x))
    assert scaled_kummer(a, b, x)[0] == pytest.approx(ref, rel=1e-13)


def test_scaled_kummer_rejects_negative():
    with pytest.raises(ForcingError):
        scaled_kummer(0.5, 1.5, -1.0)


def test_rl_of_monomials():
    t = np.array([0.0, 0.3, 1.0, 4.2])
    alpha = 0.4
    sq = DampedPolynomial((0, 0, 1))
    assert np.allclose(sq.riemann_liouville(alpha, t), 2 * t ** (2 + alpha) / math.gamma(3 + alpha),
                       rtol=1e-14)
    one = DampedPolynomial.constant(1.0)
    assert np.allclose(one.kernel_convolution(Abel(alpha), t), Abel(alpha).cumulative(t), rtol=1e-14)


def test_rl_half_of_exp_at_one():
    # (omega_0.5 * e^{-t})(1) from mpmath at 40 digits
    g = DampedPolynomial((1.0,), 1.0)
    assert g.riemann_liouville(0.5, 1.0)[0] == pytest.approx(0.60715770584139372912, rel=1e-14)
    val, _ = quad(lambda s: math.exp(-s), 0, 1, weight="alg", wvar=(0, -0.5))
    assert g.riemann_liouville(0.5, 1.0)[0] == pytest.approx(val / math.gamma(0.5), abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(coeffs=st.lists(st.floats(-3, 3), min_size=1, max_size=4), d=st.floats(0, 4),
       alpha=st.floats(0.05, 1.0), t=st.floats(0.01, 15))
def test_rl_matches_weighted_quadrature(coeffs, d, alpha, t):
    g = DampedPolynomial(tuple(coeffs), d)
    val, _ = quad(lambda s: float(g(t - s)), 0, t, weight="alg", wvar=(alpha - 1, 0),
                  epsabs=1e-13, epsrel=1e-12, limit=200)
    ref = val / math.gamma(alpha)
    got = g.riemann_liouville(alpha, t)[0]
    scale = sum(abs(c) * t**m for m, c in enumerate(coeffs)) * t**alpha + 1e-300
    assert abs(got - ref) <= 1e-9 * scale


@settings(max_examples=40, deadline=None)
@given(coeffs=st.lists(st.floats(-3, 3), min_size=1, max_size=4), d=st.floats(0, 4),
       b=st.floats(0.01, 30), t=st.floats(0.01, 15))
def test_exp_convolution_matches_quadrature(coeffs, d, b, t):
    g = DampedPolynomial(tuple(coeffs), d)
    ref, _ = quad(lambda s: math.exp(-b * (t - s)) * float(g(s)), 0, t, epsabs=1e-14,
                  epsrel=1e-12, limit=200)
    scale = sum(abs(c) * t ** (m + 1) for m, c in enumerate(coeffs)) + 1e-300
    assert abs(g.exp_convolution(b, t)[0] - ref) <= 1e-10 * scale


@pytest.mark.parametrize("kernel", [Abel(0.5), Abel(1.0), ExpSum(((1.0, 1.0), (0.5, 3.0)))])
def test_convolution_integral_is_antiderivative(kernel):
    g = DampedPolynomial.quadratic(1, 1, 1, 1)
    for t in (0.2, 1.0, 3.5):
        ref, _ = quad(lambda s: float(g.kernel_convolution(kernel, s)[0]), 0, t,
                      epsabs=1e-14, epsrel=1e-12)
        assert g.kernel_convolution_integral(kernel, t)[0] == pytest.approx(ref, rel=1e-10)


def test_derivative():
    g = DampedPolynomial.quadratic(1, 1, 1, 1)
    dg = g.derivative()
    # d/dt (1 + t + t^2) e^{-t} = (t - t^2) e^{-t}
    assert np.allclose(dg.coeffs, [0, 1, -1])
    assert np.allclose(g.derivative(2).coeffs, [1, -3, 1])


def test_forcing_averages():
    assert np.allclose(ExpForcing([2.0], 0.0).averages(0.1, 5), 2.0)
    assert np.allclose(ZeroForcing(3).averages(0.1, 4), 0.0)
    f = ExpForcing([1.0, -2.0], 0.7)
    k = 0.3
    avg = f.averages(k, 6)
    for j in range(1, 7):
        ref = quad(lambda t: math.exp(-0.7 * t), (j - 1) * k, j * k)[0] / k
        assert np.allclose(avg[j - 1], ref * np.array([1.0, -2.0]), rtol=1e-13)


def test_profile_forcing_averages_match_quadrature():
    kernel = Abel(0.5)
    g = DampedPolynomial.quadratic(1, 0, 1, 1)
    f = ProfileForcing(kernel, g, np.array([1.0]), np.array([2.0]))
    k = 0.25
    avg = f.averages(k, 8)
    for j in (1, 2, 8):
        ref = quad(lambda t: float(f.values([t])[0, 0]), (j - 1) * k, j * k,
                   epsabs=1e-14, epsrel=1e-12)[0] / k
        assert avg[j - 1, 0] == pytest.approx(ref, rel=1e-10)


def test_specs():
    assert isinstance(forcing_from_spec(None, 2), ZeroForcing)
    f = forcing_from_spec({"type": "exp", "amplitude": 3.0, "rate": 1.0}, 2)
    assert np.array_equal(f.amplitude, [3.0, 3.0])
    with pytest.raises(ForcingError):
        forcing_from_spec({"type": "exp", "amplitude": [1, 2, 3]}, 2)
    with pytest.raises(ForcingError):
        forcing_from_spec({"type": "square"}, 1)
    assert profile_from_spec({"a": 1, "c": 1, "d": 1}).coeffs == (1.0, 0.0, 1.0)
    assert profile_from_spec({"coeffs": [0, 2], "rate": 0.5}).rate == 0.5
    with pytest.raises(ForcingError):
        profile_from_spec({"x": 1})
    with pytest.raises(ForcingError):
        DampedPolynomial((1.0,), -1.0)
