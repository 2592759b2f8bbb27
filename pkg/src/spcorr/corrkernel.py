"""Spectral projection correlation functions in the Markov, Bochner and
inverse-subordinator regimes.

For a biorthogonal system ``(lambda_n, P_n, V_n, nu)`` and ``t >= s``:

* Markov:   ``rho(P_m(X_t), V_n(X_s)) = e^{-lambda_m (t-s)} / kappa(m) * delta_mn``,
            ``rho(P_m(X_t), P_n(X_s)) = e^{-lambda_m (t-s)} c(n, m)``;
* Bochner:  the same with ``lambda_m`` replaced by ``phi(lambda_m)``;
* inverse:  the exponential replaced by the bracket
            ``lambda_m int_0^s eta_{t-r}(lambda_m) U(dr) + eta_t(lambda_m)``.

Constant functions have zero variance; following the usual convention the
correlation is then reported as 0 (this covers index 0).
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Callable, Optional

from . import measures
from .measures import DensityMeasure
from .specfun import (POLY_N_MAX, LaguerreParams, gauss_laguerre_coeigen_v, gl_eigen_p,
                      GLCoefficients, laguerre_normalized, smallpert_coeigen_v,
                      smallpert_eigen_p)
from .subordinate import (EtaTransform, RenewalMeasure, SubordinatorSpec, eta,
                          inverse_bracket, is_long_tailed, laplace_exponent, mean_inverse)

__all__ = [
    "EigenSystem",
    "CorrelationQuery",
    "markov_corr",
    "bochner_corr",
    "inverse_tc_corr",
    "inverse_tc_bounds",
    "inverse_tc_asymptotic",
    "same_time_corr",
    "correlate",
]

PAIRINGS = ("PP", "PV")
REGIMES = ("markov", "bochner", "inverse")


class EigenSystem:
    """Eigenvalues, eigenfunctions, co-eigenfunctions and their stationary law.

    Parameters
    ----------
    family : str
        ``classical``, ``smallpert``, ``gausslag`` or ``custom``.
    eigenvalue : callable ``n -> lambda_n``
    eigen_p, coeigen_v : callables ``(n, x) -> values``
    measure : DensityMeasure
    n_max : int
        largest supported index.
    self_adjoint : bool
        True when ``V_n = P_n``.
    params : dict, optional

    Notes
    -----
    Condition numbers and cosines are cached per index.  Concurrent callers
    may compute the same entry twice; the values are identical and the last
    write wins.
    """

    def __init__(self, family: str, eigenvalue: Callable[[int], float], eigen_p, coeigen_v,
                 measure: DensityMeasure, n_max: int, self_adjoint: bool = False,
                 params: Optional[dict] = None, tol: float = measures.DEFAULT_TOL):
        self.family = family
        self.params = dict(params or {})
        self._eigenvalue = eigenvalue
        self._p = eigen_p
        self._v = coeigen_v
        self.measure = measure
        self.n_max = int(n_max)
        self.self_adjoint = bool(self_adjoint)
        self.tol = tol
        self._kappa: dict = {}
        self._cos: dict = {}
        self._lock = threading.Lock()
        lams = [float(eigenvalue(n)) for n in range(self.n_max + 1)]
        if lams[0] != 0.0:
            raise ValueError("lambda_0 must be 0")
        if any(v < 0 for v in lams):
            raise ValueError("eigenvalues must be nonnegative")
        if len(set(lams)) != len(lams):
            raise ValueError("eigenvalues must be simple (duplicate lambda_n found)")

    # -- constructors -----------------------------------------------------
    @classmethod
    def classical(cls, beta: float, n_max: int = POLY_N_MAX) -> "EigenSystem":
        """Self-adjoint Laguerre system under Gamma(beta+1, 1), ``lambda_n = n``."""
        f = lambda n, x: laguerre_normalized(LaguerreParams(n, beta), x)
        return cls("classical", float, f, f, DensityMeasure.gamma_beta(beta), n_max,
                   self_adjoint=True, params={"beta": float(beta)})

    @classmethod
    def smallpert(cls, b: float, n_max: int = POLY_N_MAX) -> "EigenSystem":
        """Small-perturbation system under ``nu_b``, ``lambda_n = n``."""
        return cls("smallpert", float, lambda n, x: smallpert_eigen_p(b, n, x),
                   lambda n, x: smallpert_coeigen_v(b, n, x), DensityMeasure.nu_b(b), n_max,
                   params={"b": float(b)})

    @classmethod
    def gausslag(cls, alpha: float, b: float, n_max: int = 20) -> "EigenSystem":
        """Gauss-Laguerre system under ``e_{alpha,b}``, ``lambda_n = n``.

        ``n_max`` defaults to 20, above the Rodrigues default of the
        co-eigenfunction evaluator, so that condition numbers can be tracked
        over ``m <= 20``.  The refinement tolerance is relaxed to ``1e-7``:
        ``P_m`` is small while its alternating terms are not, and near
        ``m = 20`` the evaluation itself carries relative errors of a few
        ``1e-9`` in ``||P_m||^2``.
        """
        coeffs = GLCoefficients.gauss_laguerre(alpha, b, max(n_max, 1))
        return cls("gausslag", float, lambda n, x: gl_eigen_p(coeffs, n, x),
                   lambda n, x: gauss_laguerre_coeigen_v(alpha, b, n, x, n_max=n_max),
                   DensityMeasure.e_alpha_b(alpha, b), n_max,
                   params={"alpha": float(alpha), "b": float(b)}, tol=1e-7)

    @classmethod
    def from_name(cls, family: str, **kw) -> "EigenSystem":
        family = family.lower()
        if family == "classical":
            return cls.classical(kw.get("beta", 1.0))
        if family == "smallpert":
            return cls.smallpert(kw.get("b", 2.0))
        if family == "gausslag":
            return cls.gausslag(kw.get("alpha", 0.6), kw.get("b", 1.0))
        raise ValueError(f"unknown family {family!r}; expected classical, smallpert or gausslag")

    # -- evaluation -------------------------------------------------------
    def _check(self, n):
        if int(n) != n or not 0 <= n <= self.n_max:
            raise ValueError(f"index {n!r} outside 0..{self.n_max}")
        return int(n)

    def eigenvalue(self, n: int) -> float:
        return float(self._eigenvalue(self._check(n)))

    def eigen_p(self, n: int, x):
        return self._p(self._check(n), x)

    def coeigen_v(self, n: int, x):
        return self._v(self._check(n), x)

    def kappa(self, m: int) -> float:
        m = self._check(m)
        key = (m, self.measure.base_order, self.measure.max_order)
        val = self._kappa.get(key)
        if val is None:
            val = 1.0 if m == 0 else measures.condition_number(self, m, self.tol)
            with self._lock:
                self._kappa[key] = val
        return val

    def cosine(self, n: int, m: int) -> float:
        n, m = self._check(n), self._check(m)
        if self.self_adjoint:
            # orthonormal eigenfunctions: the cosine is exactly delta_nm
            return 1.0 if n == m else 0.0
        key = (min(n, m), max(n, m), self.measure.base_order, self.measure.max_order)
        val = self._cos.get(key)
        if val is None:
            val = measures.cosine_angle(self, n, m, self.tol)
            with self._lock:
                self._cos[key] = val
        return val

    def __repr__(self):
        ps = ", ".join(f"{k}={v:g}" for k, v in self.params.items())
        return f"EigenSystem({self.family}{', ' if ps else ''}{ps})"

    @property
    def name(self) -> str:
        ps = ",".join(f"{v:g}" for v in self.params.values())
        return f"{self.family}({ps})"


@dataclass(frozen=True)
class CorrelationQuery:
    """One correlation value: indices, times, pairing and regime."""

    m: int
    n: int
    t: float
    s: float
    pairing: str = "PP"
    regime: str = "markov"
    spec: Optional[SubordinatorSpec] = None

    def __post_init__(self):
        if self.pairing not in PAIRINGS:
            raise ValueError(f"pairing must be one of {PAIRINGS}")
        if self.regime not in REGIMES:
            raise ValueError(f"regime must be one of {REGIMES}")
        if not (self.t >= 0 and self.s >= 0):
            raise ValueError("times must be nonnegative")
        if int(self.m) != self.m or int(self.n) != self.n or self.m < 0 or self.n < 0:
            raise ValueError("indices must be nonnegative integers")
        if self.regime != "markov" and self.spec is None:
            raise ValueError(f"regime {self.regime!r} needs a subordinator spec")


def _factor(sys: EigenSystem, q: CorrelationQuery) -> float:
    """Same-time correlation: ``c(n, m)`` (PP) or ``delta_mn / kappa(m)`` (PV)."""
    if q.m == 0 or q.n == 0:
        return 0.0
    if q.pairing == "PV":
        return 1.0 / sys.kappa(q.m) if q.m == q.n else 0.0
    return sys.cosine(q.n, q.m)


def _require_pv_order(sys, q):
    if q.pairing == "PV" and q.t < q.s and not sys.self_adjoint and q.m == q.n:
        raise ValueError("PV correlation with t < s has no closed form for a "
                         "non-self-adjoint system (V_n is not an eigenfunction of the "
                         "forward semigroup)")


def _exp_regime(sys, q, rate: Callable[[float], float]) -> float:
    _require_pv_order(sys, q)
    f = _factor(sys, q)
    if f == 0.0:
        return 0.0
    lag = q.t - q.s
    if lag >= 0:
        return math.exp(-rate(sys.eigenvalue(q.m)) * lag) * f
    return math.exp(-rate(sys.eigenvalue(q.n)) * (-lag)) * f


def markov_corr(sys: EigenSystem, q: CorrelationQuery) -> float:
    """Markov regime ``e^{-lambda_m (t-s)^+ - lambda_n (s-t)^+}`` times the
    same-time factor."""
    return _exp_regime(sys, q, lambda lam: lam)


def bochner_corr(sys: EigenSystem, spec: SubordinatorSpec, q: CorrelationQuery) -> float:
    """Bochner-subordinated regime: eigenvalues mapped through ``phi``."""
    return _exp_regime(sys, q, lambda lam: laplace_exponent(spec, lam))


def _ordered(q):
    # inverse regime symmetry: swap (t, s) together with (m, n)
    if q.t >= q.s:
        return q.m, q.n, q.t, q.s
    return q.n, q.m, q.s, q.t


def inverse_tc_corr(sys: EigenSystem, spec: SubordinatorSpec, q: CorrelationQuery) -> float:
    """Inverse-subordinator regime: same-time factor times
    ``lambda_m int_0^s eta_{t-r}(lambda_m) U(dr) + eta_t(lambda_m)``."""
    _require_pv_order(sys, q)
    f = _factor(sys, q)
    if f == 0.0:
        return 0.0
    m, _, t, s = _ordered(q)
    if t == s:
        return f
    return f * inverse_bracket(spec, sys.eigenvalue(m), t, s)


def inverse_tc_bounds(sys: EigenSystem, spec: SubordinatorSpec, q: CorrelationQuery):
    """``(lower, upper)`` from
    ``eta_t(lam)(lam E[L_s] + 1) <= bracket <= eta_{t-s}(lam)(lam E[L_s] + 1)``,
    each times the same-time factor.  For a negative factor the two
    endpoints swap so that ``lower <= upper`` still holds."""
    _require_pv_order(sys, q)
    f = _factor(sys, q)
    if f == 0.0:
        return 0.0, 0.0
    m, _, t, s = _ordered(q)
    lam = sys.eigenvalue(m)
    tr = EtaTransform(spec)
    mid = lam * mean_inverse(RenewalMeasure(spec), s) + 1.0
    lo, hi = eta(tr, t, lam) * mid * f, eta(tr, t - s, lam) * mid * f
    return (lo, hi) if lo <= hi else (hi, lo)


def inverse_tc_asymptotic(sys: EigenSystem, spec: SubordinatorSpec, q: CorrelationQuery) -> float:
    """Large-``t`` approximant of :func:`inverse_tc_corr`.

    Stable specs use ``f / (Gamma(1-a) t^a) * (1/lam + s^a / Gamma(1+a))``;
    other long-tailed specs use ``f eta_t(lam) (lam E[L_s] + 1)``.

    Raises
    ------
    ValueError
        when the spec is not long-tailed (the approximation then fails).
    """
    diag = is_long_tailed(spec)
    if not diag:
        raise ValueError(f"{spec} is not long-tailed (fitted index {diag.index:.4g}); "
                         "the large-time approximation does not apply")
    _require_pv_order(sys, q)
    f = _factor(sys, q)
    if f == 0.0:
        return 0.0
    m, _, t, s = _ordered(q)
    lam = sys.eigenvalue(m)
    if spec.kind == "stable":
        a = spec.alpha
        return f / (math.gamma(1.0 - a) * t ** a) * (1.0 / lam + s ** a / math.gamma(1.0 + a))
    return f * eta(EtaTransform(spec), t, lam) * (lam * mean_inverse(RenewalMeasure(spec), s) + 1.0)


def same_time_corr(sys: EigenSystem, q: CorrelationQuery) -> float:
    """``c(n, m)`` for PP and ``delta_mn / kappa(m)`` for PV."""
    if q.t != q.s:
        raise ValueError("same_time_corr needs t == s")
    return _factor(sys, q)


def correlate(sys: EigenSystem, q: CorrelationQuery) -> float:
    """Dispatch on ``q.regime``."""
    if q.regime == "markov":
        return markov_corr(sys, q)
    if q.regime == "bochner":
        return bochner_corr(sys, q.spec, q)
    return inverse_tc_corr(sys, q.spec, q)
