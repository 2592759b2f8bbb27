import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spcorr.corrkernel import CorrelationQuery, EigenSystem, inverse_tc_corr
from spcorr.inference import (
    ClassifierVerdict,
    DegenerateVarianceError,
    EstimationResult,
    UnstableInversionError,
    empirical_corr,
    g_lambda,
    jump_activity_classifier,
    kappa_hat,
    range_dependence_classifier,
    symmetry_test,
)
from spcorr.measures import sample_stationary
from spcorr.simulate import SimConfig, simulate
from spcorr.subordinate import SubordinatorSpec


# -- empirical_corr ------------------------------------------------------------

def test_corr_self_and_negated(rng):
    x = rng.normal(size=500)
    assert empirical_corr(x, x).estimate == 1.0
    assert empirical_corr(x, -x).estimate == -1.0


def test_corr_matches_numpy(rng):
    x = rng.normal(size=2000)
    y = 0.4 * x + rng.normal(size=2000)
    r = empirical_corr(x, y)
    assert r.estimate == pytest.approx(np.corrcoef(x, y)[0, 1], rel=1e-12)
    assert r.n == 2000 and r.se > 0 and "jackknife" in r.method


def test_corr_independent_pairs(rng):
    r = empirical_corr(rng.normal(size=10_000), rng.normal(size=10_000))
    assert abs(r.estimate) <= 3 * r.se


def test_corr_se_matches_iid_theory(rng):
    # for independent normals the SE of rho_hat is about 1 / sqrt(n)
    r = empirical_corr(rng.normal(size=40_000), rng.normal(size=40_000))
    assert r.se == pytest.approx(1 / math.sqrt(40_000), rel=0.25)


def test_corr_degenerate_flag():
    r = empirical_corr(np.ones(50), np.arange(50.0))
    assert r.degenerate and r.estimate == 0.0


def test_corr_validation():
    with pytest.raises(ValueError):
        empirical_corr([1.0, 2.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        empirical_corr([1.0, 2.0, 3.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        empirical_corr([1.0, np.nan, 3.0], [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        EstimationResult(0.0, -1.0, 3, "x")


# -- kappa_hat -----------------------------------------------------------------

def test_kappa_hat_classical_is_one(classical):
    x = simulate(SimConfig(paths=5000, seed=0, grid=(0.0,))).values[:, 0]
    k = kappa_hat(classical, x, 2)
    assert abs(k.estimate - 1.0) <= max(3 * k.se, 1e-12)


@pytest.mark.parametrize("m", [1, 2, 3, 4, 5])
def test_kappa_hat_smallpert_iid(smallpert2, m):
    # i.i.d. draws from nu_2, the stationary law of the smallpert(2) system
    x = sample_stationary(smallpert2.measure, 100_000, seed=0)
    k = kappa_hat(smallpert2, x, m)
    assert abs(k.estimate - smallpert2.kappa(m)) <= 3 * k.se


def test_kappa_hat_se_shrinks_like_root_n(smallpert2):
    ses = {}
    for n in (1_000, 10_000, 100_000):
        vals = []
        for seed in range(8):
            x = np.random.default_rng(seed).gamma(3.0, 1.0, n)
            vals.append(kappa_hat(smallpert2, x, 2).se)
        ses[n] = float(np.mean(vals))
    slope = np.polyfit(np.log(list(ses)), np.log(list(ses.values())), 1)[0]
    assert slope == pytest.approx(-0.5, abs=0.1)


def test_kappa_hat_degenerate(classical):
    with pytest.raises(DegenerateVarianceError):
        kappa_hat(classical, np.full(100, 2.0), 1)


def test_kappa_hat_unstable_inversion():
    # P_1 = x and V_1 = sin(50 x) are nearly uncorrelated
    sys = EigenSystem("custom", float, lambda n, x: np.asarray(x, float),
                      lambda n, x: np.sin(50 * np.asarray(x, float)),
                      EigenSystem.classical(1.0).measure, 2)
    x = np.random.default_rng(0).gamma(2.0, 1.0, 20_000)
    with pytest.raises(UnstableInversionError):
        kappa_hat(sys, x, 1, floor=0.5)


# -- symmetry test -------------------------------------------------------------

def test_symmetry_accepts_classical_rejects_smallpert(classical, smallpert2):
    x = simulate(SimConfig(paths=100_000, seed=3, grid=(0.0,))).values[:, 0]
    v = symmetry_test([classical, smallpert2], x, 2)
    assert v.label == classical.name
    assert v.diagnostics["accepted"] == [classical.name]
    assert v.diagnostics["candidates"][smallpert2.name]["accepted"] is False


def test_symmetry_accepts_smallpert_on_its_own_law(classical, smallpert2):
    x = sample_stationary(smallpert2.measure, 100_000, seed=1)
    v = symmetry_test([classical, smallpert2], x, 1)
    assert smallpert2.name in v.diagnostics["accepted"]


def test_symmetry_infinite_eps_accepts_all(classical, smallpert2):
    x = np.random.default_rng(0).gamma(2.0, 1.0, 2000)
    v = symmetry_test([classical, smallpert2], x, 1, eps=math.inf)
    assert v.diagnostics["accepted"] == [classical.name, smallpert2.name]
    assert v.label == f"{classical.name}+{smallpert2.name}"


def test_symmetry_all_degenerate(classical):
    with pytest.raises(DegenerateVarianceError):
        symmetry_test([classical], np.full(50, 1.0), 1)


# -- g_lambda ------------------------------------------------------------------

def test_g_lambda_markov_ensemble(classical):
    out = simulate(SimConfig(paths=20_000, seed=2, grid=tuple(0.5 * k for k in range(6))))
    g = g_lambda(classical, out.values, 1)
    assert g.method == "ensemble"
    np.testing.assert_array_equal(g.lags, np.arange(1, 6))
    want = np.exp(-0.5 * g.lags)
    assert np.all(np.abs(g.values - want) <= 4 * g.se)


def test_g_lambda_inverse_stable_tracks_bracket(classical):
    spec = SubordinatorSpec.stable(0.5)
    grid = (1.0, 2.0, 4.0, 8.0)
    out = simulate(SimConfig(paths=20_000, seed=4, grid=grid, regime="inverse", spec="stable:0.5"))
    g = g_lambda(classical, out.values, 1)
    for lag, val, se in zip(g.lags, g.values, g.se):
        t = grid[int(lag)]
        want = inverse_tc_corr(classical, spec, CorrelationQuery(1, 1, t, 1.0, "PP", "inverse", spec))
        assert abs(val - want) <= 4 * se


def test_g_lambda_single_path_overlapping(classical):
    out = simulate(SimConfig(paths=1, seed=0, grid=tuple(0.2 * k for k in range(4000))))
    g = g_lambda(classical, out.values, 1)
    assert g.method == "overlapping-pairs"
    assert abs(g.values[0] - math.exp(-0.2)) <= 4 * g.se[0]


def test_g_lambda_precondition(classical):
    with pytest.raises(ValueError):
        g_lambda(classical, np.ones((10, 3)) + np.arange(3), 1, j=2)


# -- range dependence classifier ---------------------------------------------

@pytest.mark.parametrize("c", [0.3, 0.5, 1.0])
def test_range_exponential_is_short(c):
    k = np.arange(1, 31)
    v = range_dependence_classifier(np.exp(-c * k))
    assert v.label == "short-range"
    assert v.params["decay_rate"] == pytest.approx(c, abs=1e-10)


@pytest.mark.parametrize("a", [0.3, 0.5, 1.0])
def test_range_power_is_long(a):
    k = np.arange(1, 31)
    v = range_dependence_classifier(k ** -a)
    assert v.label == "long-range"
    assert v.params["power_exponent"] == pytest.approx(a, abs=1e-10)


def test_range_poisson_inverse_is_short(classical):
    spec = SubordinatorSpec.poisson(1.0)
    ts = np.arange(2, 22, dtype=float)
    g = [inverse_tc_corr(classical, spec, CorrelationQuery(1, 1, t, 1.0, "PP", "inverse", spec)) for t in ts]
    assert range_dependence_classifier(g, lags=ts - 1.0).label == "short-range"


@settings(max_examples=40, deadline=None)
@given(st.floats(-20, 20), st.sampled_from(["exp", "pow"]), st.floats(0.1, 2.0))
def test_range_scale_invariant(log_scale, kind, rate):
    k = np.arange(1, 21, dtype=float)
    g = np.exp(-rate * k) if kind == "exp" else k ** -rate
    a = range_dependence_classifier(g)
    b = range_dependence_classifier(math.exp(log_scale) * g)
    assert a.label == b.label


def test_range_drops_nonpositive_with_warning():
    g = np.exp(-0.5 * np.arange(1, 13))
    g[3] = -1e-3
    with pytest.warns(UserWarning):
        v = range_dependence_classifier(g)
    assert v.diagnostics["n_lags"] == 11


def test_range_needs_enough_lags():
    with pytest.raises(ValueError):
        range_dependence_classifier(np.exp(-np.arange(1, 6)))


# -- jump activity classifier --------------------------------------------------

def test_jump_constant_is_pure_diffusion():
    v = jump_activity_classifier(np.ones(10))
    assert v.label == "pure_diffusion" and v.diagnostics["regime"] == "(i)"


def test_jump_within_se_of_one_is_pure_diffusion():
    k = 1 + np.array([0.01, -0.02, 0.0, 0.015, -0.01, 0.005])
    assert jump_activity_classifier(k, se=0.01).label == "pure_diffusion"
    assert jump_activity_classifier(k, se=0.001).label != "pure_diffusion"


@pytest.mark.parametrize("p", [0.5, 1.5, 3.0])
def test_jump_power_exact(p):
    m = np.arange(5, 21, dtype=float)
    v = jump_activity_classifier(m ** p, ms=m)
    assert v.label == "power"
    assert abs(v.params["power_exponent"] - p) < 1e-10


@pytest.mark.parametrize("c", [0.2, 1.0])
def test_jump_exponential_exact(c):
    m = np.arange(5, 21, dtype=float)
    v = jump_activity_classifier(np.exp(c * m), ms=m)
    assert v.label == "exponential"
    assert abs(v.params["exponential_slope"] - c) < 1e-10


def test_jump_stretched_exact():
    m = np.arange(1, 21, dtype=float)
    v = jump_activity_classifier(np.exp(2.0 * m ** 0.4), ms=m)
    assert v.label == "stretched_exponential"
    assert v.params["stretched_beta"] == pytest.approx(0.4)
    assert abs(v.params["stretched_scale"] - 2.0) < 1e-10


def test_jump_validation():
    with pytest.raises(ValueError):
        jump_activity_classifier(np.ones(5))
    with pytest.raises(ValueError):
        jump_activity_classifier([1, 2, 3, 4, 5, -1.0])


def test_verdict_serialises():
    v = jump_activity_classifier(np.ones(6))
    d = v.as_dict()
    assert isinstance(v, ClassifierVerdict) and set(d) == {"label", "scores", "params", "diagnostics"}
