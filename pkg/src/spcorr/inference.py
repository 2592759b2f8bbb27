"""Statistical procedures built on spectral projection correlations:
empirical condition numbers, a symmetry test between candidate systems, and
classifiers for range dependence and jump activity.

Standard errors come from a delete-a-block jackknife with blocks of 100
observations (fewer for short samples, so that at least 20 blocks remain).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "EstimationResult",
    "ClassifierVerdict",
    "GSeries",
    "DegenerateVarianceError",
    "UnstableInversionError",
    "empirical_corr",
    "kappa_hat",
    "symmetry_test",
    "g_lambda",
    "range_dependence_classifier",
    "jump_activity_classifier",
    "AMBIGUITY_BAND",
]

AMBIGUITY_BAND = (0.8, 1.25)
JACKKNIFE_BLOCK = 100
KAPPA_FLOOR = 1e-3


class DegenerateVarianceError(ValueError):
    """A sample variance vanished, so the correlation is not identified."""


class UnstableInversionError(ValueError):
    """``|rho_hat|`` fell below the floor; ``1 / rho_hat`` is not trustworthy."""


@dataclass(frozen=True)
class EstimationResult:
    estimate: float
    se: float
    n: int
    method: str
    degenerate: bool = False

    def __post_init__(self):
        if self.se < 0:
            raise ValueError("standard error must be nonnegative")

    def as_dict(self):
        return {"estimate": self.estimate, "se": self.se, "n": self.n,
                "method": self.method, "degenerate": self.degenerate}


@dataclass(frozen=True)
class ClassifierVerdict:
    label: str
    scores: dict
    params: dict
    diagnostics: dict

    def as_dict(self):
        return {"label": self.label, "scores": self.scores, "params": self.params,
                "diagnostics": self.diagnostics}


def _block_size(n: int, block: Optional[int]) -> int:
    if block is not None:
        return max(1, int(block))
    return max(1, min(JACKKNIFE_BLOCK, n // 20))


def _pearson_from_sums(n, sx, sy, sxx, syy, sxy):
    vx = sxx - sx * sx / n
    vy = syy - sy * sy / n
    cxy = sxy - sx * sy / n
    return cxy / np.sqrt(vx * vy)


def empirical_corr(xs, ys, block: Optional[int] = None) -> EstimationResult:
    """Pearson correlation of paired samples with a block-jackknife SE.

    A vanishing sample variance returns ``estimate = 0`` with
    ``degenerate=True`` (the zero-variance convention for correlations)
    instead of raising.
    """
    x = np.asarray(xs, dtype=float).ravel()
    y = np.asarray(ys, dtype=float).ravel()
    if x.shape != y.shape:
        raise ValueError("series must have equal length")
    n = x.size
    if n < 3:
        raise ValueError("need at least 3 pairs")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("series contain non-finite values")
    # centre for numerical stability of the sums
    x = x - x.mean()
    y = y - y.mean()
    sxx, syy = float(np.dot(x, x)), float(np.dot(y, y))
    if sxx <= 1e-300 * n or syy <= 1e-300 * n or sxx == 0 or syy == 0:
        return EstimationResult(0.0, 0.0, n, "pearson", degenerate=True)
    r = float(np.dot(x, y) / math.sqrt(sxx * syy))
    r = min(1.0, max(-1.0, r))
    bs = _block_size(n, block)
    g = n // bs
    if g < 2:
        return EstimationResult(r, float("nan"), n, "pearson")
    m = g * bs
    xb = x[:m].reshape(g, bs)
    yb = y[:m].reshape(g, bs)
    tot = np.array([x.sum(), y.sum(), sxx, syy, float(np.dot(x, y))])
    parts = np.stack([xb.sum(1), yb.sum(1), (xb * xb).sum(1), (yb * yb).sum(1),
                      (xb * yb).sum(1)], axis=1)
    loo = tot[None, :] - parts
    with np.errstate(invalid="ignore", divide="ignore"):
        rj = _pearson_from_sums(n - bs, *loo.T)
    rj = rj[np.isfinite(rj)]
    if rj.size < 2:
        return EstimationResult(r, float("nan"), n, "pearson")
    se = math.sqrt((rj.size - 1) / rj.size * float(np.sum((rj - rj.mean()) ** 2)))
    return EstimationResult(r, se, n, f"pearson/jackknife(block={bs})")


def kappa_hat(sys, sample, m: int, floor: float = KAPPA_FLOOR,
              block: Optional[int] = None) -> EstimationResult:
    """Empirical condition number ``1 / corr(P_m(X), V_m(X))``.

    The SE is the jackknife SE of the correlation pushed through ``1/rho``
    (delta method: ``se_rho / rho^2``).

    Raises
    ------
    DegenerateVarianceError
        if either transformed series is constant.
    UnstableInversionError
        if ``|rho_hat| < floor``.
    """
    x = np.asarray(sample, dtype=float).ravel()
    p = np.asarray(sys.eigen_p(m, x), dtype=float)
    v = np.asarray(sys.coeigen_v(m, x), dtype=float)
    rho = empirical_corr(p, v, block)
    if rho.degenerate:
        raise DegenerateVarianceError(f"zero sample variance for index m={m}")
    if abs(rho.estimate) < floor:
        raise UnstableInversionError(
            f"|rho_hat|={abs(rho.estimate):.3g} below the floor {floor:g} for m={m}")
    k = 1.0 / rho.estimate
    se = rho.se / rho.estimate ** 2 if math.isfinite(rho.se) else float("nan")
    return EstimationResult(k, se, rho.n, "inverse-correlation/delta")


def symmetry_test(candidates: Sequence, sample, m: int, eps: Optional[float] = None,
                  eps_factor: float = 3.0, slack: float = 1e-8) -> ClassifierVerdict:
    """Which candidate systems are compatible with the sample at index ``m``.

    Candidate ``i`` is accepted when ``|kappa_i(m) - kappa_hat_i(m)|`` is
    below ``eps`` (default: ``eps_factor`` times the SE of ``kappa_hat_i``,
    never below ``slack``; the floor matters for self-adjoint candidates,
    whose ``kappa_hat`` is exactly 1 with zero SE).  Every accepted candidate
    is listed; the label is their names joined by ``+`` or ``none``.

    Raises
    ------
    DegenerateVarianceError
        if no candidate yields a usable ``kappa_hat``.
    """
    rows = {}
    accepted = []
    for sys in candidates:
        name = getattr(sys, "name", repr(sys))
        try:
            kh = kappa_hat(sys, sample, m)
        except (DegenerateVarianceError, UnstableInversionError) as exc:
            rows[name] = {"status": type(exc).__name__, "message": str(exc)}
            continue
        kap = sys.kappa(m)
        dist = abs(kap - kh.estimate)
        thr = eps if eps is not None else max(eps_factor * kh.se, slack)
        ok = bool(dist < thr or (math.isinf(thr) and thr > 0))
        rows[name] = {"status": "ok", "kappa": kap, "kappa_hat": kh.estimate, "se": kh.se,
                      "distance": dist, "threshold": thr, "accepted": ok}
        if ok:
            accepted.append(name)
    if all(r["status"] != "ok" for r in rows.values()):
        raise DegenerateVarianceError("no candidate produced a usable kappa_hat")
    label = "+".join(accepted) if accepted else "none"
    return ClassifierVerdict(label, {k: r.get("distance") for k, r in rows.items()},
                             {"m": m, "eps": eps, "eps_factor": eps_factor},
                             {"candidates": rows, "accepted": accepted})


@dataclass(frozen=True)
class GSeries:
    """``g(k) = kappa_hat * rho_hat(P_m(X_k), V_m(X_j))`` over lags ``k - j``."""

    lags: np.ndarray
    values: np.ndarray
    se: np.ndarray
    degenerate: tuple = field(default_factory=tuple)
    method: str = ""


def g_lambda(sys, samples, m: int, j: int = 0) -> GSeries:
    """Rescaled biorthogonal correlation sequence for lags ``k > j``.

    ``samples`` is ``(paths, times)``.  With several paths, ``rho_hat`` at
    each ``k`` is an ensemble average across paths and ``kappa_hat`` comes
    from column ``j``.  With a single path, lag ``k - j`` uses the
    overlapping pairs ``(X_{i + k - j}, X_i)`` and ``kappa_hat`` pools the
    whole path.  Lags with a degenerate variance are reported and skipped.
    """
    arr = np.atleast_2d(np.asarray(samples, dtype=float))
    paths, T = arr.shape
    if not 0 <= j < T - 1:
        raise ValueError("need 0 <= j < number of times - 1")
    single = paths == 1
    base = arr[0] if single else arr[:, j]
    kh = kappa_hat(sys, base, m)
    lags, vals, ses, bad = [], [], [], []
    for k in range(j + 1, T):
        lag = k - j
        if single:
            xk, xj = arr[0, lag:], arr[0, : T - lag]
            if xk.size < 3:
                break
        else:
            xk, xj = arr[:, k], arr[:, j]
        r = empirical_corr(sys.eigen_p(m, xk), sys.coeigen_v(m, xj))
        if r.degenerate:
            bad.append(lag)
            continue
        g = kh.estimate * r.estimate
        se = math.hypot(kh.estimate * r.se, r.estimate * kh.se)
        lags.append(lag)
        vals.append(g)
        ses.append(se)
    return GSeries(np.array(lags, dtype=float), np.array(vals), np.array(ses), tuple(bad),
                   "overlapping-pairs" if single else "ensemble")


def _lsq(xcol, y):
    A = np.vstack([np.ones_like(xcol), xcol]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    r = y - A @ coef
    return coef, float(np.dot(r, r))


def _pick(rss: dict, band=AMBIGUITY_BAND, floor: float = 0.0):
    """Label with the smallest RSS; ``ambiguous`` when the runner-up is
    within the band.  ``floor`` absorbs roundoff so that two exact fits tie."""
    items = sorted(rss.items(), key=lambda kv: kv[1])
    (best, b), (_, s2) = items[0], items[1]
    ratio = (s2 + floor) / (b + floor) if (b + floor) > 0 else float("inf")
    if band[0] <= ratio <= band[1]:
        return "ambiguous", ratio
    return best, ratio


def range_dependence_classifier(g, lags=None, min_lags: int = 8) -> ClassifierVerdict:
    """Short- versus long-range dependence of a correlation sequence.

    Fits ``log g = a - c k`` (exponential decay, short range) and
    ``log g = a - p log k`` (power decay, long range) by least squares.
    The label is the model with the smaller residual sum of squares, or
    ``ambiguous`` when the RSS ratio lies in ``[0.8, 1.25]``.  Non-positive
    values are dropped with a warning.
    """
    gv = np.asarray(g, dtype=float).ravel()
    k = np.arange(1, gv.size + 1, dtype=float) if lags is None else np.asarray(lags, float).ravel()
    if k.shape != gv.shape:
        raise ValueError("lags and g must have the same length")
    ok = (gv > 0) & np.isfinite(gv) & (k > 0)
    if not np.all(ok):
        warnings.warn(f"dropping {int((~ok).sum())} non-positive or invalid values", stacklevel=2)
    gv, k = gv[ok], k[ok]
    if gv.size < min_lags:
        raise ValueError(f"need at least {min_lags} usable lags, got {gv.size}")
    y = np.log(gv)
    ce, rss_e = _lsq(k, y)
    cp, rss_p = _lsq(np.log(k), y)
    floor = 1e-24 * max(1.0, float(np.sum((y - y.mean()) ** 2)))
    label, ratio = _pick({"short-range": rss_e, "long-range": rss_p}, floor=floor)
    return ClassifierVerdict(
        label,
        {"rss_exponential": rss_e, "rss_power": rss_p},
        {"decay_rate": -float(ce[1]), "power_exponent": -float(cp[1])},
        {"rss_ratio": ratio, "n_lags": int(gv.size), "band": list(AMBIGUITY_BAND)})


REGIME_LABELS = {
    "pure_diffusion": "(i)",
    "power": "(ii)",
    "exponential": "(iii)",
    "stretched_exponential": "(iv)",
}


def jump_activity_classifier(kappas, ms=None, se=None, min_indices: int = 6,
                             beta_grid=None, unit_tol: float = 1e-8) -> ClassifierVerdict:
    """Growth regime of condition numbers ``kappa(m)``.

    In order:

    (i) every ``kappa(m)`` within ``3 se`` of 1 (with ``se`` at least
        ``unit_tol``) gives ``pure_diffusion``;
    otherwise ``log kappa`` is regressed on ``log m`` (``power``), on ``m``
    (``exponential``), and on ``m^beta`` for ``beta`` on a grid in
    ``(0, 1)`` (``stretched_exponential``).  The smallest RSS wins, with the
    ``ambiguous`` label when the runner-up is within the band
    ``[0.8, 1.25]``.
    """
    kv = np.asarray(kappas, dtype=float).ravel()
    m = np.arange(1, kv.size + 1, dtype=float) if ms is None else np.asarray(ms, float).ravel()
    if m.shape != kv.shape:
        raise ValueError("ms and kappas must have the same length")
    if kv.size < min_indices:
        raise ValueError(f"need at least {min_indices} indices, got {kv.size}")
    if np.any(kv <= 0) or np.any(m <= 0):
        raise ValueError("kappas and indices must be positive")
    s = np.zeros_like(kv) if se is None else np.broadcast_to(np.asarray(se, float), kv.shape)
    tol = np.maximum(3.0 * s, unit_tol)
    if np.all(np.abs(kv - 1.0) <= tol):
        return ClassifierVerdict("pure_diffusion", {}, {},
                                 {"regime": "(i)", "max_deviation": float(np.max(np.abs(kv - 1)))})
    y = np.log(kv)
    cp, rss_p = _lsq(np.log(m), y)
    ce, rss_e = _lsq(m, y)
    grid = np.round(np.arange(0.05, 0.951, 0.05), 10) if beta_grid is None else np.asarray(beta_grid)
    best_beta, rss_s, cs = None, math.inf, None
    for beta in grid:
        c, r = _lsq(m ** beta, y)
        if r < rss_s:
            best_beta, rss_s, cs = float(beta), r, c
    floor = 1e-24 * max(1.0, float(np.sum((y - y.mean()) ** 2)))
    rss = {"power": rss_p, "exponential": rss_e, "stretched_exponential": rss_s}
    label, ratio = _pick(rss, floor=floor)
    return ClassifierVerdict(
        label,
        {f"rss_{k}": v for k, v in rss.items()},
        {"power_exponent": float(cp[1]), "exponential_slope": float(ce[1]),
         "stretched_beta": best_beta, "stretched_scale": float(cs[1])},
        {"regime": REGIME_LABELS.get(label, "ambiguous"), "rss_ratio": ratio,
         "n_indices": int(kv.size), "band": list(AMBIGUITY_BAND)})
