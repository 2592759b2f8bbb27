import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from spcorr.specfun import (ExpTermSum, GLCoefficients, LaguerreParams, gauss_laguerre_coeigen_v,
                            gauss_laguerre_v_coefficients, gl_eigen_p, laguerre,
                            laguerre_normalized, log_cn, mittag_leffler, smallpert_coeigen_v,
                            smallpert_eigen_p)

# E_alpha(-x) from the power series in mpmath with precision scaled to the
# size of the largest term (about e^{x^{1/alpha}}), 20 significant digits.
ML_ORACLE = [
    (0.3, 0.5, 0.63264900594359902138),
    (0.3, 8.0, 0.089493095818620723168),
    (0.5, 1.0, 0.42758357615580700441),
    (0.7, 3.0, 0.13789710966502707183),
    (0.7, 12.0, 0.02976116832544935252),
    (0.8, 40.0, 0.0056207330638633682699),
    (0.9, 0.25, 0.77386953164960228438),
    (0.6, 150.0, 0.0030130772817564306972),
]


def explicit_laguerre(n, beta, x):
    # sum_k (-1)^k C(n+beta, n-k) x^k / k!  in extended precision
    mp.mp.dps = 50
    return float(mp.fsum((-1) ** k * mp.binomial(n + beta, n - k) * mp.mpf(x) ** k / mp.factorial(k)
                         for k in range(n + 1)))


def gamma_density(beta):
    return lambda x: x ** beta * math.exp(-x) / math.gamma(beta + 1)


# -- Laguerre polynomials ---------------------------------------------------

def test_laguerre_examples():
    assert laguerre(LaguerreParams(0, 2.5), 7.3) == 1.0
    assert laguerre(LaguerreParams(1, 2.0), 1.0) == pytest.approx(2.0, abs=1e-15)
    assert laguerre(LaguerreParams(5, 0.0), 0.0) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("n", [0, 1, 2, 7, 15, 30])
@pytest.mark.parametrize("beta", [-0.5, 0.0, 1.0, 3.7])
def test_laguerre_matches_explicit_sum(n, beta):
    for x in (0.0, 0.3, 2.0, 9.5, 40.0):
        exact = explicit_laguerre(n, beta, x)
        got = laguerre(LaguerreParams(n, beta), x)
        scale = max(abs(exact), 1e-300)
        # relative 1e-12, with an absolute floor near roots set by the term size
        terms = explicit_laguerre(n, beta, -x) if x > 0 else 1.0
        assert abs(got - exact) <= 1e-12 * max(scale, 1e-3 * abs(terms))


def test_laguerre_vectorised_and_scipy():
    x = np.linspace(0, 20, 41)
    np.testing.assert_allclose(laguerre(LaguerreParams(6, 1.5), x),
                               special.eval_genlaguerre(6, 1.5, x), rtol=1e-11, atol=1e-11)


def test_laguerre_rejects_bad_input():
    with pytest.raises(ValueError):
        LaguerreParams(2, -1.0)
    with pytest.raises(ValueError):
        LaguerreParams(-1, 0.0)
    with pytest.raises(ValueError):
        laguerre(LaguerreParams(2, 0.0), -0.1)


def test_normalized_examples():
    assert laguerre_normalized(LaguerreParams(0, 1.0), 0.4) == 1.0
    assert laguerre_normalized(LaguerreParams(2, 0.0), 0.0) == pytest.approx(1.0, abs=1e-15)
    assert math.exp(log_cn(3, 0.0)) == pytest.approx(1.0)
    assert math.exp(log_cn(2, 1.0)) == pytest.approx(2 * 1 / 6)


@pytest.mark.parametrize("beta", [0.0, 1.0, 2.5])
def test_normalized_orthonormal_by_adaptive_quad(beta):
    dens = gamma_density(beta)
    for n in range(5):
        for m in range(n, 5):
            f = lambda x: (laguerre_normalized(LaguerreParams(n, beta), x)
                           * laguerre_normalized(LaguerreParams(m, beta), x) * dens(x))
            val = integrate.quad(f, 0, np.inf, epsabs=1e-12, limit=200)[0]
            assert val == pytest.approx(float(n == m), abs=1e-9)


# -- Mittag-Leffler ---------------------------------------------------------

def test_mittag_leffler_examples():
    assert mittag_leffler(0.7, 0.0) == 1.0
    assert mittag_leffler(1.0, -2.0) == pytest.approx(math.exp(-2.0), abs=1e-15)
    assert mittag_leffler(0.5, -1.0) == pytest.approx(math.e * math.erfc(1.0), abs=1e-12)
    assert mittag_leffler(0.5, -1.0) == pytest.approx(0.427584, abs=1e-6)


@pytest.mark.parametrize("alpha,x,value", ML_ORACLE)
def test_mittag_leffler_frozen_series_oracle(alpha, x, value):
    assert mittag_leffler(alpha, -x) == pytest.approx(value, abs=1e-13)


def test_mittag_leffler_half_closed_form_grid():
    for x in np.linspace(0, 300, 601):
        assert abs(mittag_leffler(0.5, -x) - special.erfcx(x)) < 1e-10


def test_mittag_leffler_array_and_errors():
    z = -np.array([[0.0, 1.0], [5.0, 50.0]])
    out = mittag_leffler(0.6, z)
    assert out.shape == (2, 2)
    assert out[0, 0] == 1.0
    with pytest.raises(ValueError):
        mittag_leffler(0.0, -1.0)
    with pytest.raises(ValueError):
        mittag_leffler(1.2, -1.0)
    with pytest.raises(ValueError):
        mittag_leffler(0.5, 0.5)


@settings(max_examples=60, deadline=None)
@given(alpha=st.floats(0.05, 1.0), x=st.floats(0.0, 500.0), dx=st.floats(1e-3, 50.0))
def test_mittag_leffler_decreasing_and_bounded(alpha, x, dx):
    a, b = mittag_leffler(alpha, -x), mittag_leffler(alpha, -(x + dx))
    assert 0.0 < b <= a <= 1.0


@pytest.mark.parametrize("alpha", [0.5, 0.7, 0.9])
@pytest.mark.parametrize("lam", [0.5, 1.0, 3.0])
def test_mittag_leffler_tail_asymptotic(alpha, lam):
    # lam t^alpha is at least 50 here; for alpha = 0.3 it is only about 8 at
    # t = 1e4 and the one-term tail is still 7% off
    t = 1e4
    x = lam * t ** alpha
    ratio = mittag_leffler(alpha, -x) * math.gamma(1 - alpha) * x
    assert ratio == pytest.approx(1.0, abs=0.02)


# -- generalized Laguerre coefficient form ------------------------------------

def test_gl_coefficients_invariants():
    c = GLCoefficients.gauss_laguerre(0.6, 1.0, 10)
    assert c.wphi_log[0] == 0.0
    phi = lambda k: (4 - 1) / 2 + k + k / (2 * (2 + k))
    sp = GLCoefficients.small_perturbation(2.0, 8)
    np.testing.assert_allclose(np.diff(sp.wphi_log), [math.log(phi(k)) for k in range(1, 9)],
                               rtol=1e-14)
    with pytest.raises(ValueError):
        GLCoefficients((0.5, 1.0))
    with pytest.raises(ValueError):
        GLCoefficients.from_phi(lambda k: -1.0, 3)


def test_gl_eigen_p_examples():
    for coeffs in (GLCoefficients.classical(), GLCoefficients.gauss_laguerre(0.4, 2.0)):
        assert gl_eigen_p(coeffs, 0, 5.0) == 1.0
    a, b = 0.6, 1.5
    x = np.array([0.0, 0.7, 3.0])
    expect = 1 - math.gamma(a * b + 1) * x / math.gamma(a + a * b + 1)
    np.testing.assert_allclose(gl_eigen_p(GLCoefficients.gauss_laguerre(a, b), 1, x), expect,
                               rtol=1e-14)
    with pytest.raises(ValueError):
        gl_eigen_p(GLCoefficients.classical(5), 6, 1.0)


@pytest.mark.parametrize("n", range(16))
def test_gl_eigen_p_classical_reproduces_laguerre(n):
    coeffs = GLCoefficients.classical()
    x = np.linspace(0.05, 12, 37)
    ref = np.array([explicit_laguerre(n, 0.0, v) for v in x])
    got = gl_eigen_p(coeffs, n, x)
    # relative 1e-10 measured against the term magnitude, which is what
    # bounds roundoff in any alternating evaluation
    mag = np.array([explicit_laguerre(n, 0.0, -v) for v in x])
    assert np.all(np.abs(got - ref) <= 1e-10 * np.maximum(np.abs(ref), 1e-3 * mag))


def test_smallpert_examples():
    assert smallpert_eigen_p(1.5, 0, 3.0) == pytest.approx(1.0, abs=1e-15)
    assert smallpert_eigen_p(2.0, 1, 0.0) == pytest.approx(1.0, abs=1e-15)
    assert smallpert_coeigen_v(2.0, 0, 1.0) == pytest.approx(1.0, abs=1e-15)
    assert smallpert_coeigen_v(2.0, 1, 0.0) == pytest.approx(2.0, abs=1e-15)
    with pytest.raises(ValueError):
        smallpert_eigen_p(0.5, 1, 1.0)
    with pytest.raises(ValueError):
        smallpert_coeigen_v(0.5, 1, 1.0)


def test_smallpert_formula_against_laguerre():
    b, n = 2.5, 4
    x = np.linspace(0, 10, 21)
    c = math.exp(log_cn(n, b + 1))
    expect = c * special.eval_genlaguerre(n, b + 1, x) - c / b * x * special.eval_genlaguerre(n - 1, b + 2, x)
    np.testing.assert_allclose(smallpert_eigen_p(b, n, x), expect, rtol=1e-10, atol=1e-12)
    v_expect = (special.eval_genlaguerre(n, b - 1, x) + x * special.eval_genlaguerre(n, b, x)) / (x + 1)
    np.testing.assert_allclose(smallpert_coeigen_v(b, n, x), v_expect, rtol=1e-10, atol=1e-12)


# -- Rodrigues term algebra ------------------------------------------------

def test_exp_term_sum_basics():
    f = ExpTermSum(2.0, ((1.0, 1.5), (-0.5, 0.0)))
    x = np.array([0.5, 1.0, 2.0])
    np.testing.assert_allclose(f(x), (x ** 1.5 - 0.5) * np.exp(-x ** 2))
    np.testing.assert_allclose(f.ratio_to(1.5, x), 1 - 0.5 * x ** -1.5)
    with pytest.raises(ValueError):
        f(0.0)
    with pytest.raises(ValueError):
        ExpTermSum(0.0)


@settings(max_examples=30, deadline=None)
@given(alpha_inv=st.floats(1.05, 4.0),
       terms=st.lists(st.tuples(st.floats(-3, 3), st.floats(0.0, 4.0)), min_size=1, max_size=4),
       seed=st.integers(0, 2 ** 16))
def test_exp_term_sum_derivative_matches_finite_differences(alpha_inv, terms, seed):
    f = ExpTermSum(alpha_inv, terms)
    df = f.derivative()
    xs = np.random.default_rng(seed).uniform(0.1, 10, 20)
    # five-point stencil on the local length scale of x^a e^{-x^{1/alpha}}
    amax = max(a for _, a in terms)
    h = 1e-3 * xs / (1 + alpha_inv * xs ** alpha_inv + amax)
    fd = (-f(xs + 2 * h) + 8 * f(xs + h) - 8 * f(xs - h) + f(xs - 2 * h)) / (12 * h)
    mag = sum(abs(c) * (a + alpha_inv * xs ** alpha_inv) * xs ** (a - 1)
              for c, a in terms) * np.exp(-xs ** alpha_inv)
    assert np.all(np.abs(df(xs) - fd) <= 1e-6 * np.maximum(np.abs(fd), mag) + 1e-300)


def test_gauss_laguerre_v_examples():
    assert gauss_laguerre_coeigen_v(0.6, 1.0, 0, 2.3) == pytest.approx(1.0)
    # (x e)'/e = b + 1/a - x^{1/a}/a, at (a, b, x) = (0.5, 1, 1) equal to 1
    assert gauss_laguerre_coeigen_v(0.5, 1.0, 1, 1.0) == pytest.approx(1.0, abs=1e-14)
    a, b = 0.5, 1.0
    e = lambda x: x ** (b + 1 / a - 1) * math.exp(-x ** (1 / a))
    h = 1e-5
    fd = ((1 + h) * e(1 + h) - (1 - h) * e(1 - h)) / (2 * h) / e(1.0)
    assert gauss_laguerre_coeigen_v(a, b, 1, 1.0) == pytest.approx(fd, rel=1e-8)


def test_gauss_laguerre_v_second_degree_against_mpmath():
    a, b, x0 = 0.6, 1.3, 1.7
    mp.mp.dps = 40
    A, B = mp.mpf("0.6"), mp.mpf("1.3")
    e = lambda x: x ** (B + 1 / A - 1) * mp.exp(-x ** (1 / A))
    ref = mp.diff(lambda x: x ** 2 * e(x), mp.mpf("1.7"), 2) / (2 * e(mp.mpf("1.7")))
    assert gauss_laguerre_coeigen_v(a, b, 2, x0) == pytest.approx(float(ref), rel=1e-12)


def test_gauss_laguerre_v_coefficients_polynomial_in_y():
    a, b = 0.6, 1.0
    d = gauss_laguerre_v_coefficients(a, b, 3)
    x = np.array([0.3, 1.1, 2.5])
    y = x ** (1 / a)
    np.testing.assert_allclose(gauss_laguerre_coeigen_v(a, b, 3, x), np.polyval(d[::-1], y),
                               rtol=1e-12)


def test_gauss_laguerre_v_errors():
    with pytest.raises(ValueError):
        gauss_laguerre_coeigen_v(0.6, 1.0, 1, 0.0)
    with pytest.raises(ValueError):
        gauss_laguerre_coeigen_v(0.6, 1.0, 13, 1.0)
    with pytest.raises(ValueError):
        gauss_laguerre_coeigen_v(1.0, 1.0, 1, 1.0)
    with pytest.raises(ValueError):
        gauss_laguerre_coeigen_v(0.5, -2.0, 1, 1.0)
