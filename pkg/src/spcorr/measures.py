"""Stationary measures on (0, inf), Gauss rules matched to them, and the
weighted inner products built on top (norms, condition numbers, angle
cosines, biorthogonality residuals).

All three stationary laws reduce to Gamma weights after a power
substitution:

* ``gamma_beta``: Gamma(beta + 1, 1) itself;
* ``nu_b``: ``(1 + x) / (b + 1)`` times Gamma(b, 1);
* ``e_alpha_b``: ``Y = X^{1/alpha}`` is Gamma(alpha b + 1, 1).

Rules are assembled from three-term recurrence coefficients.  Nodes come
from the symmetric tridiagonal eigenproblem; weights come from the
Christoffel function ``1 / sum_k p_k(x_i)^2`` evaluated by the orthonormal
recurrence, which keeps them relatively accurate even where they are far
below machine epsilon.  That matters here because the integrands grow like
high powers of ``x`` and sit on those tiny tail weights.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.linalg import eigh_tridiagonal

__all__ = [
    "QuadratureRule",
    "DensityMeasure",
    "Integral",
    "QuadratureError",
    "gauss_rule",
    "gamma_rule",
    "inner_product",
    "condition_number",
    "cosine_angle",
    "biorthogonality_check",
    "sample_stationary",
]

DEFAULT_TOL = 1e-9


class QuadratureError(RuntimeError):
    """Raised when rule refinement cannot meet the requested tolerance."""


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and positive weights of a Gauss rule for a probability measure."""

    nodes: np.ndarray
    weights: np.ndarray
    kind: str
    order: int

    def __post_init__(self):
        x = np.asarray(self.nodes, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if x.shape != w.shape or x.ndim != 1:
            raise ValueError("nodes and weights must be 1-d arrays of equal length")
        if np.any(x <= 0) or np.any(w <= 0):
            raise ValueError("nodes and weights must be positive")
        x.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "nodes", x)
        object.__setattr__(self, "weights", w)

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


def gauss_rule(a, b, mass: float = 1.0, kind: str = "custom") -> QuadratureRule:
    """Gauss rule from monic recurrence coefficients.

    ``p_{k+1}(x) = (x - a_k) p_k(x) - b_k p_{k-1}(x)``, with ``b_0`` ignored
    and ``mass`` the total mass of the measure.

    Nodes whose weight underflows to zero are dropped.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = len(a)
    sb = np.sqrt(b[1:n])
    x = eigh_tridiagonal(a, sb, eigvals_only=True)
    # Christoffel numbers with running rescaling of the orthonormal values
    p_prev = np.zeros_like(x)
    p = np.ones_like(x)
    ssum = np.ones_like(x)
    logscale = np.zeros_like(x)
    big = 1e150
    for k in range(n - 1):
        p_next = ((x - a[k]) * p - (sb[k - 1] if k > 0 else 0.0) * p_prev) / sb[k]
        p_prev, p = p, p_next
        over = np.abs(p) > big
        if np.any(over):
            s = np.where(over, 1.0 / big, 1.0)
            p = p * s
            p_prev = p_prev * s
            ssum = ssum * s * s
            logscale = logscale + np.where(over, 2.0 * math.log(big), 0.0)
        ssum = ssum + p * p
    logw = math.log(mass) - np.log(ssum) - logscale
    w = np.exp(logw)
    keep = (w > 0) & (x > 0)
    return QuadratureRule(x[keep], w[keep], kind, n)


@lru_cache(maxsize=64)
def gamma_rule(shape: float, order: int) -> QuadratureRule:
    """Gauss rule for the Gamma(shape, 1) probability law (generalized
    Gauss-Laguerre with parameter ``shape - 1``)."""
    if not shape > 0:
        raise ValueError("shape must be positive")
    beta = shape - 1.0
    k = np.arange(order, dtype=float)
    a = 2.0 * k + beta + 1.0
    b = k * (k + beta)
    return gauss_rule(a, b, 1.0, kind=f"gamma({shape:g})")


def _chebyshev_moments(moments, n):
    # Chebyshev algorithm: ordinary moments -> monic recurrence coefficients
    sig_prev = [0] * (2 * n)
    sig = list(moments[: 2 * n])
    a = [moments[1] / moments[0]]
    b = [moments[0]]
    for k in range(1, n):
        new = [0] * (2 * n)
        for l in range(k, 2 * n - k):
            new[l] = sig[l + 1] - a[k - 1] * sig[l] - b[k - 1] * sig_prev[l]
        a.append(new[k + 1] / new[k] - sig[k] / sig[k - 1])
        b.append(new[k] / sig[k - 1])
        sig_prev, sig = sig, new
    return a, b


_MP_LOCK = threading.Lock()


@lru_cache(maxsize=32)
def _power_gamma_rule(shape: float, q: int, order: int) -> QuadratureRule:
    """Gauss rule in ``u`` for ``U = Y^{1/q}`` with ``Y ~ Gamma(shape, 1)``.

    The moments ``E[U^k] = Gamma(shape + k/q) / Gamma(shape)`` are exact, so
    the recurrence is obtained from them by the Chebyshev algorithm in
    extended precision (the map from moments to coefficients is badly
    conditioned; about three decimal digits per node suffice).
    """
    if q == 1:
        return gamma_rule(shape, order)
    import mpmath as mp

    # mpmath precision is process-global, so concurrent callers must not
    # interleave their workdps blocks
    with _MP_LOCK, mp.workdps(3 * order + 60):
        sh = mp.mpf(shape)
        g0 = mp.gamma(sh)
        mom = [mp.gamma(sh + mp.mpf(k) / q) / g0 for k in range(2 * order)]
        a, b = _chebyshev_moments(mom, order)
        a = [float(v) for v in a]
        b = [float(v) for v in b]
    return gauss_rule(a, b, 1.0, kind=f"gamma({shape:g})^(1/{q})")


def _rational_denominator(alpha: float, max_den: int = 20) -> int:
    frac = Fraction(alpha).limit_denominator(max_den)
    if abs(float(frac) - alpha) < 1e-13:
        return frac.denominator
    return 1


@dataclass(frozen=True)
class DensityMeasure:
    """Probability measure on (0, inf) with a matched quadrature family.

    Use the constructors :meth:`gamma_beta`, :meth:`nu_b`, :meth:`e_alpha_b`
    or :meth:`custom`.

    Attributes
    ----------
    family : str
        one of ``gamma_beta``, ``nu_b``, ``e_alpha_b``, ``custom``.
    params : dict
    base_order, max_order : int
        first rule size and the cap for refinement by doubling.
    """

    family: str
    params: dict
    density: Callable = field(repr=False, compare=False)
    base_order: int = 200
    max_order: int = 1600
    _rule_factory: Optional[Callable] = field(default=None, repr=False, compare=False)
    _sampler: Optional[Callable] = field(default=None, repr=False, compare=False)
    _mean: Optional[float] = field(default=None, repr=False, compare=False)

    def __hash__(self):
        return hash((self.family, tuple(sorted(self.params.items()))))

    # -- constructors -----------------------------------------------------
    @classmethod
    def gamma_beta(cls, beta: float) -> "DensityMeasure":
        """Gamma(beta + 1, 1): ``x^beta e^{-x} / Gamma(beta + 1)``."""
        if not beta > -1:
            raise ValueError("beta must exceed -1")
        beta = float(beta)
        lg = math.lgamma(beta + 1)

        def dens(x):
            x = np.asarray(x, dtype=float)
            with np.errstate(divide="ignore"):
                return np.exp(beta * np.log(x) - x - lg)

        return cls("gamma_beta", {"beta": beta}, dens,
                   _rule_factory=lambda n: gamma_rule(beta + 1.0, n),
                   _sampler=lambda rng, k: rng.gamma(beta + 1.0, 1.0, size=k),
                   _mean=beta + 1.0)

    @classmethod
    def nu_b(cls, b: float) -> "DensityMeasure":
        """``(1 + x) / (b + 1)`` times the Gamma(b, 1) law, i.e. the mixture
        ``1/(b+1) Gamma(b) + b/(b+1) Gamma(b+1)``."""
        if not b >= 1:
            raise ValueError("b must be at least 1")
        b = float(b)
        lg = math.lgamma(b)

        def dens(x):
            x = np.asarray(x, dtype=float)
            with np.errstate(divide="ignore"):
                return (1.0 + x) / (b + 1.0) * np.exp((b - 1.0) * np.log(x) - x - lg)

        def rule(n):
            base = gamma_rule(b, n)
            return QuadratureRule(base.nodes, base.weights * (1.0 + base.nodes) / (b + 1.0),
                                  f"nu_b({b:g})", n)

        def sampler(rng, k):
            extra = rng.random(k) < b / (b + 1.0)
            return rng.gamma(b + extra.astype(float), 1.0)

        return cls("nu_b", {"b": b}, dens, _rule_factory=rule, _sampler=sampler,
                   _mean=b * (b + 2.0) / (b + 1.0))

    @classmethod
    def e_alpha_b(cls, alpha: float, b: float) -> "DensityMeasure":
        """Law of ``X = Y^alpha`` with ``Y ~ Gamma(alpha b + 1, 1)``.

        Its density is ``x^{b + 1/alpha - 1} exp(-x^{1/alpha}) / (alpha Gamma(alpha b + 1))``.

        When ``alpha = p/q`` is a fraction with small denominator the rule
        lives in ``u = y^{1/q}``, where both ``x^k = u^{pk}`` and
        ``y^k = u^{qk}`` are polynomials.  Gauss rules are then exact for
        products of eigenfunctions and co-eigenfunctions, and the rule sizes
        default to 100 nodes doubled up to 400.  For other ``alpha`` the rule
        is the Gamma rule in ``y`` and convergence is only algebraic.
        """
        if not 0 < alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if not alpha * b + 1 > 0:
            raise ValueError("need alpha * b + 1 > 0")
        alpha = float(alpha)
        b = float(b)
        shape = alpha * b + 1.0
        lg = math.lgamma(shape)
        c = b + 1.0 / alpha - 1.0
        q = _rational_denominator(alpha)

        def dens(x):
            x = np.asarray(x, dtype=float)
            with np.errstate(divide="ignore"):
                return np.exp(c * np.log(x) - x ** (1.0 / alpha) - lg) / alpha

        def rule(n):
            base = _power_gamma_rule(shape, q, n)
            x = base.nodes ** (q * alpha)
            keep = x > 0
            return QuadratureRule(x[keep], base.weights[keep], f"e_alpha_b({alpha:g},{b:g})", n)

        orders = (100, 400) if q > 1 else (200, 1600)
        return cls("e_alpha_b", {"alpha": alpha, "b": b}, dens,
                   base_order=orders[0], max_order=orders[1], _rule_factory=rule,
                   _sampler=lambda rng, k: rng.gamma(shape, 1.0, size=k) ** alpha,
                   _mean=math.exp(math.lgamma(shape + alpha) - lg))

    @classmethod
    def custom(cls, density: Callable, sampler: Optional[Callable] = None,
               rule_factory: Optional[Callable] = None, name: str = "custom",
               base_order: int = 200, max_order: int = 1600) -> "DensityMeasure":
        """User supplied density.

        Without ``rule_factory`` the integrals are taken with the Gamma(1, 1)
        rule after dividing out ``e^{-x}``, which is adequate for densities
        with exponential tails.  ``sampler(rng, count)`` enables
        :func:`sample_stationary`.
        """

        def rule(n):
            base = gamma_rule(1.0, n)
            w = base.weights * np.asarray(density(base.nodes), dtype=float) * np.exp(base.nodes)
            keep = w > 0
            return QuadratureRule(base.nodes[keep], w[keep], name, n)

        return cls("custom", {"name": name}, density, base_order=base_order,
                   max_order=max_order, _rule_factory=rule_factory or rule,
                   _sampler=sampler)

    # -- helpers ------------------------------------------------------------
    def rule(self, order: Optional[int] = None) -> QuadratureRule:
        return self._rule_factory(int(order or self.base_order))

    def orders(self):
        n = self.base_order
        while n <= self.max_order:
            yield n
            n *= 2

    @property
    def mean(self) -> Optional[float]:
        return self._mean


class Integral(NamedTuple):
    """Quadrature value with the refinement error estimate."""

    value: float
    error: float
    order: int


def _refine(evaluate, mu: DensityMeasure, tol: float):
    """Apply ``evaluate(rule) -> (values ndarray, scale ndarray)`` on successive
    rules until two consecutive orders agree within ``tol * max(1, scale)``."""
    prev = None
    worst = None
    for n in mu.orders():
        vals, scale = evaluate(mu.rule(n))
        if prev is not None:
            err = np.abs(vals - prev)
            bound = tol * np.maximum(1.0, scale)
            if np.all(err <= bound):
                return vals, err, n
            worst = float(np.max(err / bound)) * tol
        prev = vals
    raise QuadratureError(
        f"quadrature refinement did not reach tol={tol:g} by order {mu.max_order} "
        f"(scaled discrepancy {worst:.3g})")


def inner_product(f: Callable, g: Callable, mu: DensityMeasure,
                  tol: float = DEFAULT_TOL) -> Integral:
    """``<f, g>_mu = int f g dmu`` by matched Gauss quadrature.

    The rule is doubled from ``mu.base_order`` until two successive values
    agree within ``tol * max(1, int |f g| dmu)``; the last difference is
    returned as the error estimate.

    Raises
    ------
    QuadratureError
        when the cap ``mu.max_order`` is reached first.
    """

    def ev(rule):
        fg = np.asarray(f(rule.nodes), dtype=float) * np.asarray(g(rule.nodes), dtype=float)
        return np.array([rule.integrate(fg)]), np.array([rule.integrate(np.abs(fg))])

    vals, err, n = _refine(ev, mu, tol)
    return Integral(float(vals[0]), float(err[0]), n)


def _gram(sys, idx, mu, tol, which=("P", "V")):
    """All inner products between the listed eigenfunctions/co-eigenfunctions."""
    idx = list(idx)

    def ev(rule):
        x = rule.nodes
        cols = []
        for kind in which:
            fn = sys.eigen_p if kind == "P" else sys.coeigen_v
            cols.append(np.stack([np.asarray(fn(i, x), dtype=float) for i in idx]))
        F = np.concatenate(cols)
        wF = F * rule.weights
        G = wF @ F.T
        S = np.abs(wF) @ np.abs(F).T
        return G.ravel(), S.ravel()

    vals, err, n = _refine(ev, mu, tol)
    k = len(which) * len(idx)
    return vals.reshape(k, k), err.reshape(k, k), n


def norms(sys, m: int, tol: float = DEFAULT_TOL):
    """``(||P_m||, ||V_m||)`` under the system's stationary measure."""
    mu = sys.measure

    def ev(rule):
        p = np.asarray(sys.eigen_p(m, rule.nodes), dtype=float)
        v = np.asarray(sys.coeigen_v(m, rule.nodes), dtype=float)
        sq = np.array([rule.integrate(p * p), rule.integrate(v * v)])
        return sq, sq

    vals, _, _ = _refine(ev, mu, tol)
    return math.sqrt(vals[0]), math.sqrt(vals[1])


def condition_number(sys, m: int, tol: float = DEFAULT_TOL) -> float:
    """Condition number ``kappa(m) = ||P_m|| ||V_m||`` of the eigenvalue ``lambda_m``.

    Cauchy-Schwarz with ``<P_m, V_m> = 1`` forces ``kappa >= 1``; a value
    below ``1 - 1e-6`` signals a broken system or quadrature and raises.
    """
    p, v = norms(sys, m, tol)
    kappa = p * v
    if kappa < 1.0 - 1e-6:
        raise ValueError(f"condition number {kappa!r} < 1 for m={m}: the system is not "
                         "biorthogonal under its measure")
    return kappa


def cosine_angle(sys, n: int, m: int, tol: float = DEFAULT_TOL) -> float:
    """``c(n, m) = <P_n, P_m> / (||P_n|| ||P_m||)``, clipped to [-1, 1]."""
    if n == m:
        return 1.0
    G, _, _ = _gram(sys, [n, m], sys.measure, tol, which=("P",))
    c = G[0, 1] / math.sqrt(G[0, 0] * G[1, 1])
    return float(min(1.0, max(-1.0, c)))


def biorthogonality_check(sys, n_max: int, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Matrix of ``|<P_n, V_m> - delta_{nm}|`` for ``n, m <= n_max``."""
    idx = range(n_max + 1)
    mu = sys.measure
    k = n_max + 1

    def ev(rule):
        x = rule.nodes
        P = np.stack([np.asarray(sys.eigen_p(i, x), dtype=float) for i in idx])
        V = np.stack([np.asarray(sys.coeigen_v(i, x), dtype=float) for i in idx])
        wP = P * rule.weights
        return (wP @ V.T).ravel(), (np.abs(wP) @ np.abs(V).T).ravel()

    vals, _, _ = _refine(ev, mu, tol)
    return np.abs(vals.reshape(k, k) - np.eye(k))


def sample_stationary(mu: DensityMeasure, count: int, seed: int) -> np.ndarray:
    """I.i.d. draws from ``mu``.

    ``gamma_beta`` samples Gamma directly, ``nu_b`` picks the Gamma(b) or
    Gamma(b+1) component with probabilities ``1/(b+1)`` and ``b/(b+1)``, and
    ``e_alpha_b`` returns ``G^alpha`` with ``G ~ Gamma(alpha b + 1, 1)``.
    """
    if mu._sampler is None:
        raise ValueError(f"no sampler registered for family {mu.family!r}")
    if count < 0:
        raise ValueError("count must be nonnegative")
    rng = np.random.default_rng(seed)
    return np.asarray(mu._sampler(rng, int(count)), dtype=float)
