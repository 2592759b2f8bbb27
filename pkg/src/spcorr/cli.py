"""Command-line interface: ``spcorr {corr,simulate,estimate,validate}``.

Every subcommand accepts ``--config FILE`` (plain ``key = value`` lines with
``#`` comments, or a JSON run manifest written by an earlier run),
``--seed`` and ``--threads``.  Values resolve as flags, then config file,
then built-in defaults.  Numbers in CSV output carry 17 significant digits.
"""
from __future__ import annotations

import argparse
import csv
import contextlib
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from typing import Callable, List, Optional

import numpy as np

from . import __version__
from .corrkernel import (CorrelationQuery, EigenSystem, correlate, inverse_tc_asymptotic,
                         inverse_tc_bounds, markov_corr, bochner_corr, inverse_tc_corr)
from .inference import (DegenerateVarianceError, UnstableInversionError, empirical_corr,
                        g_lambda, jump_activity_classifier, kappa_hat,
                        range_dependence_classifier, symmetry_test)
from .measures import biorthogonality_check
from .simulate import SimConfig, simulate
from .specfun import laguerre_normalized, LaguerreParams, mittag_leffler
from .subordinate import (EtaTransform, SubordinatorSpec, eta, inverse_bracket, is_long_tailed,
                          laplace_exponent)

CORR_HEADER = ["m", "n", "t", "s", "pairing", "regime", "value", "lower", "upper", "asymptotic"]
PATHS_HEADER = ["path_id", "t", "value"]
SUMMARY_HEADER = ["m", "t_from", "t_to", "rho", "se", "n", "closed_form"]


class CLIError(Exception):
    """User-facing error; printed without a traceback, exit status 2."""


class CSVFormatError(CLIError):
    pass


# ---------------------------------------------------------------------------
# formatting and parsing helpers
# ---------------------------------------------------------------------------

def fmt(x) -> str:
    """17 significant digits; blank for ``None``."""
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


def float_list(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    parts = [p for p in str(text).replace(";", ",").split(",") if p.strip()]
    try:
        return tuple(float(p) for p in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def int_list(text) -> tuple:
    vals = float_list(text)
    if any(v != int(v) for v in vals):
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    return tuple(int(v) for v in vals)


def positive_float(text) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text!r}")
    return v


def sub_spec(text) -> SubordinatorSpec:
    if isinstance(text, SubordinatorSpec):
        return text
    try:
        return SubordinatorSpec.parse(str(text))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def load_config(path: str) -> dict:
    """Read ``key = value`` lines (``#`` starts a comment) or a JSON manifest."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise CLIError(f"cannot read config {path}: {exc}") from exc
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise CLIError(f"{path}: invalid JSON manifest: {exc}") from exc
        params = data.get("params", data.get("manifest", {}).get("params"))
        if not isinstance(params, dict):
            raise CLIError(f"{path}: manifest has no params object")
        out = {}
        for k, v in params.items():
            if v is None:
                continue
            if isinstance(v, list):
                v = ",".join(repr(float(x)) if isinstance(x, float) else str(x) for x in v)
            elif isinstance(v, float):
                v = repr(v)
            elif not isinstance(v, bool):
                v = str(v)
            out[k] = v
        return out
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CLIError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, val = (p.strip() for p in line.split("=", 1))
        if not key:
            raise CLIError(f"{path}:{lineno}: empty key")
        out[key.replace("-", "_")] = val
    return out


def _json_clean(obj):
    if isinstance(obj, dict):
        return {str(k): _json_clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_json_clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, SubordinatorSpec):
        return str(obj)
    return obj


def manifest(command: str, args, wall: float) -> dict:
    params = {k: v for k, v in vars(args).items()
              if k not in ("func", "command", "config") and not callable(v)}
    return _json_clean({"command": command, "params": params,
                        "seed": getattr(args, "seed", None), "version": __version__,
                        "wall_time": wall})


def _open_out(path):
    if path in (None, "-"):
        return contextlib.nullcontext(sys.stdout)
    try:
        return open(path, "w", newline="", encoding="utf-8")
    except OSError as exc:
        raise CLIError(f"cannot write {path}: {exc}") from exc


def _build_system(family: str, args) -> EigenSystem:
    if family == "classical":
        return EigenSystem.classical(args.beta)
    if family == "smallpert":
        return EigenSystem.smallpert(args.b)
    if family == "gausslag":
        return EigenSystem.gausslag(args.alpha, args.b)
    raise CLIError(f"unknown family {family!r}")


def parse_candidate(text: str) -> EigenSystem:
    """``classical:BETA``, ``smallpert:B`` or ``gausslag:ALPHA:B``."""
    bits = text.strip().split(":")
    fam, vals = bits[0].lower(), bits[1:]
    try:
        nums = [float(v) for v in vals]
        if fam == "classical" and len(nums) <= 1:
            return EigenSystem.classical(nums[0] if nums else 1.0)
        if fam == "smallpert" and len(nums) <= 1:
            return EigenSystem.smallpert(nums[0] if nums else 2.0)
        if fam == "gausslag" and len(nums) in (0, 2):
            return EigenSystem.gausslag(*(nums or [0.6, 1.0]))
    except ValueError as exc:
        raise CLIError(f"bad candidate {text!r}: {exc}") from exc
    raise CLIError(f"bad candidate {text!r}; use classical:BETA, smallpert:B or gausslag:ALPHA:B")


def _pmap(fn, items, threads: int):
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, items))
    return [fn(i) for i in items]


# ---------------------------------------------------------------------------
# corr
# ---------------------------------------------------------------------------

def cmd_corr(args) -> int:
    if args.regime != "markov" and args.sub is None:
        raise CLIError(f"--regime {args.regime} needs --sub (e.g. stable:0.5 or poisson:2)")
    if args.regime == "markov" and args.sub is not None:
        raise CLIError("--sub only applies to the bochner and inverse regimes")
    system = _build_system(args.family, args)
    spec = args.sub
    long_tail = args.regime == "inverse" and bool(is_long_tailed(spec))
    queries = [CorrelationQuery(args.m, args.n, t, s, args.pairing, args.regime, spec)
               for t in args.t for s in args.s]

    def row(q):
        try:
            val = correlate(system, q)
            lo = hi = asym = None
            if q.regime == "inverse":
                lo, hi = inverse_tc_bounds(system, spec, q)
                if long_tail and q.t != q.s:
                    asym = inverse_tc_asymptotic(system, spec, q)
        except ValueError as exc:
            raise CLIError(f"(m={q.m}, n={q.n}, t={q.t:g}, s={q.s:g}): {exc}") from exc
        return [q.m, q.n, fmt(q.t), fmt(q.s), q.pairing, q.regime, fmt(val), fmt(lo), fmt(hi),
                fmt(asym)]

    rows = _pmap(row, queries, args.threads)
    with _open_out(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CORR_HEADER)
        w.writerows(rows)
    return 0


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def _closed_form_classical(args, m: int, t: float, s: float) -> float:
    sys_ = EigenSystem.classical(args.beta)
    q = CorrelationQuery(m, m, t, s, "PV", args.regime, args.sub)
    if args.regime == "markov":
        return markov_corr(sys_, q)
    if args.regime == "bochner":
        return bochner_corr(sys_, args.sub, q)
    return inverse_tc_corr(sys_, args.sub, q)


def summary_rows(paths, args) -> List[list]:
    rows = []
    v = paths.values
    grid = paths.grid
    for m in args.summary_m:
        f = lambda x: laguerre_normalized(LaguerreParams(m, args.beta), x)
        base = f(v[:, 0])
        for k in range(1, grid.size):
            r = empirical_corr(f(v[:, k]), base)
            cf = None
            if args.sigma2 == 1.0:
                cf = _closed_form_classical(args, m, float(grid[k]), float(grid[0]))
            rows.append([m, fmt(grid[0]), fmt(grid[k]), fmt(r.estimate), fmt(r.se), r.n, fmt(cf)])
    return rows


def cmd_simulate(args) -> int:
    t0 = time.perf_counter()
    if args.regime != "markov" and args.sub is None:
        raise CLIError(f"--regime {args.regime} needs --sub")
    try:
        cfg = SimConfig(paths=args.paths, seed=args.seed, grid=args.grid, regime=args.regime,
                        beta=args.beta, sigma2=args.sigma2,
                        spec=str(args.sub) if args.regime != "markov" else None,
                        dt=args.dt, threads=args.threads)
    except ValueError as exc:
        raise CLIError(f"invalid simulation config: {exc}") from exc
    paths = simulate(cfg)
    with _open_out(args.out) as fh:
        fh.write(",".join(PATHS_HEADER) + "\n")
        tt = [fmt(t) for t in paths.grid]
        buf = []
        for i, row in enumerate(paths.values):
            for tj, x in zip(tt, row):
                buf.append(f"{i},{tj},{x:.17g}\n")
            if len(buf) > 50000:
                fh.write("".join(buf))
                buf.clear()
        fh.write("".join(buf))
    if args.summary:
        rows = summary_rows(paths, args)
        with _open_out(args.summary) as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SUMMARY_HEADER)
            w.writerows(rows)
    man_path = args.manifest or (None if args.out in (None, "-") else args.out + ".manifest.json")
    if man_path:
        with _open_out(man_path) as fh:
            json.dump(manifest("simulate", args, time.perf_counter() - t0), fh, indent=2,
                      sort_keys=True)
            fh.write("\n")
    return 0


# ---------------------------------------------------------------------------
# estimate
# ---------------------------------------------------------------------------

def read_paths_csv(path: str):
    """Read ``path_id,t,value`` (or a bare ``value`` column, one trajectory).

    Returns ``(values, grid)`` with ``values`` of shape ``(paths, times)``.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise CLIError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise CSVFormatError(f"{path}: empty file (a header row is required)") from None
        if "value" not in header:
            raise CSVFormatError(f"{path}:1: header must contain a 'value' column, got {header}")
        cols = {h: i for i, h in enumerate(header)}
        want = [c for c in ("path_id", "t", "value") if c in cols]
        data = {c: [] for c in want}
        for lineno, rec in enumerate(reader, 2):
            if not rec or all(not f.strip() for f in rec):
                continue
            if len(rec) != len(header):
                raise CSVFormatError(f"{path}:{lineno}: expected {len(header)} fields, got {len(rec)}")
            for c in want:
                txt = rec[cols[c]].strip()
                try:
                    v = float(txt)
                except ValueError:
                    raise CSVFormatError(
                        f"{path}:{lineno}: column {c!r} (#{cols[c] + 1}): not a number: {txt!r}"
                    ) from None
                if not math.isfinite(v):
                    raise CSVFormatError(f"{path}:{lineno}: column {c!r}: non-finite value")
                data[c].append(v)
    vals = np.asarray(data["value"])
    if vals.size == 0:
        raise CSVFormatError(f"{path}: no data rows")
    if "path_id" not in data or "t" not in data:
        return vals[None, :], np.arange(vals.size, dtype=float)
    pid, uinv = np.unique(np.asarray(data["path_id"]), return_inverse=True)
    grid, tinv = np.unique(np.asarray(data["t"]), return_inverse=True)
    if vals.size != pid.size * grid.size:
        raise CSVFormatError(f"{path}: ragged data, {vals.size} rows for {pid.size} paths x "
                             f"{grid.size} times")
    out = np.full((pid.size, grid.size), np.nan)
    out[uinv, tinv] = vals
    if np.isnan(out).any():
        raise CSVFormatError(f"{path}: duplicate (path_id, t) rows")
    return out, grid


def read_g_csv(path: str):
    """Read a ``lag,g`` sequence."""
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise CLIError(f"cannot read {path}: {exc}") from exc
    lags, gs = [], []
    with fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if "lag" not in header or "g" not in header:
            raise CSVFormatError(f"{path}:1: header must contain 'lag' and 'g', got {header}")
        il, ig = header.index("lag"), header.index("g")
        for lineno, rec in enumerate(reader, 2):
            if not rec:
                continue
            for name, idx, dst in (("lag", il, lags), ("g", ig, gs)):
                try:
                    dst.append(float(rec[idx]))
                except (ValueError, IndexError):
                    raise CSVFormatError(f"{path}:{lineno}: column {name!r}: bad value") from None
    return np.asarray(lags), np.asarray(gs)


def _skipped(reason: str) -> dict:
    return {"label": "skipped", "reason": reason}


def estimate_report(values, grid, args, source: Optional[str] = None) -> dict:
    """Build the verdict document (without the manifest)."""
    report = {"input": {"file": source, "paths": 0, "times": 0}, "kappa_hat": [],
              "symmetry": {"label": "skipped", "accepted": [], "per_index": {}},
              "jump_activity": {"label": "skipped", "candidate": None, "per_candidate": {}},
              "range_dependence": _skipped("no sample given")}
    cands = [parse_candidate(c) for c in args.candidates]
    if values is not None:
        paths, T = values.shape
        report["input"].update(paths=int(paths), times=int(T))
        j = args.lag_from
        if not 0 <= j < T:
            raise CLIError(f"--lag-from {j} outside the {T} sampled times")
        marg = values[:, j] if paths > 1 else values[0]

        def khat(task):
            sys_, m = task
            row = {"candidate": sys_.name, "m": m}
            try:
                kh = kappa_hat(sys_, marg, m)
                row.update(status="ok", kappa=sys_.kappa(m), kappa_hat=kh.estimate, se=kh.se,
                           n=kh.n)
            except (DegenerateVarianceError, UnstableInversionError) as exc:
                row.update(status=type(exc).__name__, message=str(exc))
            return row

        ms = sorted(set(args.m) | set(args.jump_m))
        report["kappa_hat"] = _pmap(khat, [(c, m) for c in cands for m in ms], args.threads)

        per_index, acc_sets = {}, []
        for m in args.m:
            try:
                v = symmetry_test(cands, marg, m, eps=args.eps)
            except DegenerateVarianceError as exc:
                per_index[str(m)] = {"label": "none", "scores": {}, "params": {"m": m},
                                     "diagnostics": {"error": str(exc)}}
                acc_sets.append(set())
                continue
            per_index[str(m)] = v.as_dict()
            acc_sets.append(set(v.diagnostics["accepted"]))
        accepted = [c.name for c in cands if all(c.name in s for s in acc_sets)]
        report["symmetry"] = {"label": "+".join(accepted) if accepted else "none",
                              "accepted": accepted, "per_index": per_index}

        rows = {(r["candidate"], r["m"]): r for r in report["kappa_hat"]}
        per_c = {}
        for c in cands:
            rs = [rows[(c.name, m)] for m in args.jump_m]
            bad = [r for r in rs if r["status"] != "ok"]
            if bad:
                per_c[c.name] = _skipped(f"kappa_hat unusable at m={bad[0]['m']}: {bad[0]['status']}")
                continue
            try:
                per_c[c.name] = jump_activity_classifier(
                    [r["kappa_hat"] for r in rs], args.jump_m,
                    [r["se"] if math.isfinite(r["se"]) else 0.0 for r in rs]).as_dict()
            except ValueError as exc:
                per_c[c.name] = _skipped(str(exc))
        chosen = next((c for c in cands if c.name in accepted), cands[0])
        report["jump_activity"] = {"label": per_c[chosen.name]["label"], "candidate": chosen.name,
                                   "per_candidate": per_c}

        if T >= 2 and args.g_input is None:
            try:
                gs = g_lambda(chosen, values, args.range_m, j)
                lags = (grid[j + gs.lags.astype(int)] - grid[j]) if paths > 1 else gs.lags
                if args.g_output:
                    with _open_out(args.g_output) as fh:
                        w = csv.writer(fh, lineterminator="\n")
                        w.writerow(["lag", "g", "se"])
                        w.writerows([fmt(a), fmt(b), fmt(c)] for a, b, c in zip(lags, gs.values, gs.se))
                v = range_dependence_classifier(gs.values, lags)
                d = v.as_dict()
                d["diagnostics"].update(candidate=chosen.name, m=args.range_m, method=gs.method)
                report["range_dependence"] = d
            except (ValueError, DegenerateVarianceError, UnstableInversionError) as exc:
                report["range_dependence"] = _skipped(str(exc))
        elif args.g_input is None:
            report["range_dependence"] = _skipped("a single sampling time has no lags")
    if args.g_input is not None:
        lags, g = read_g_csv(args.g_input)
        try:
            report["range_dependence"] = range_dependence_classifier(g, lags).as_dict()
        except ValueError as exc:
            report["range_dependence"] = _skipped(str(exc))
    return report


def cmd_estimate(args) -> int:
    t0 = time.perf_counter()
    if args.input is None and args.g_input is None:
        raise CLIError("estimate needs --input (sample CSV) and/or --g-input (lag,g CSV)")
    values = grid = None
    if args.input is not None:
        values, grid = read_paths_csv(args.input)
    report = estimate_report(values, grid, args, args.input)
    doc = {"manifest": manifest("estimate", args, time.perf_counter() - t0)}
    doc.update(report)
    with _open_out(args.out) as fh:
        json.dump(_json_clean(doc), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


def verdict_schema() -> dict:
    """The JSON schema describing ``estimate`` output."""
    text = resources.files("spcorr").joinpath("schemas/verdicts.schema.json").read_text("utf-8")
    return json.loads(text)


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------

@dataclass
class Check:
    name: str
    run: Callable[[], float]
    tol: float


def _biorth(system: EigenSystem, n: int) -> Callable[[], float]:
    return lambda: float(biorthogonality_check(system, n).max())


def _remark1(spec, lams=(0.5, 1.0, 5.0), ts=(0.5, 1.0, 10.0)):
    def run():
        return max(abs(inverse_bracket(spec, lam, t, t) - 1.0) for lam in lams for t in ts)
    return run


def _eta_laplace(spec, lams=(0.5, 2.0), qs=(0.5, 1.0, 3.0)):
    """``int_0^inf e^{-qt} eta_t(lam) dt = phi(q) / (q (phi(q) + lam))``."""
    from scipy import integrate

    tr = EtaTransform(spec)

    def run():
        worst = 0.0
        for lam in lams:
            for q in qs:
                f = lambda t: math.exp(-q * t) * eta(tr, t, lam)
                if spec.kind == "poisson":
                    # eta is piecewise constant between integers
                    pts = np.arange(0, 60)
                    val = math.fsum(integrate.quad(f, a, a + 1, epsabs=1e-14)[0] for a in pts)
                else:
                    val = integrate.quad(f, 0, np.inf, epsabs=1e-13, epsrel=1e-11, limit=400)[0]
                phi = laplace_exponent(spec, q)
                worst = max(worst, abs(val - phi / (q * (phi + lam))))
        return worst
    return run


def _asym_ratio(alpha):
    def run():
        spec = SubordinatorSpec.stable(alpha)
        sys_ = EigenSystem.classical(1.0)
        worst = 0.0
        for lam in (1, 2):
            q = CorrelationQuery(lam, lam, 1e4, 1.0, "PV", "inverse", spec)
            worst = max(worst, abs(inverse_tc_corr(sys_, spec, q)
                                   / inverse_tc_asymptotic(sys_, spec, q) - 1.0))
        return worst
    return run


def _degeneration(kind: str):
    def run():
        sys_ = EigenSystem.classical(1.0)
        spec = SubordinatorSpec.parse("drift:1")
        rng = np.random.default_rng(20240613)
        worst = 0.0
        for _ in range(100):
            m = int(rng.integers(1, 6))
            s = float(rng.uniform(0, 3))
            t = s + float(rng.uniform(0, 3))
            qm = CorrelationQuery(m, m, t, s, "PV", "markov")
            q = CorrelationQuery(m, m, t, s, "PV", kind, spec)
            worst = max(worst, abs(correlate(sys_, q) - markov_corr(sys_, qm)))
        return worst
    return run


def _ml_check():
    from scipy.special import erfcx
    xs = np.round(np.arange(0.1, 5.0001, 0.1), 10)
    return max(max(abs(mittag_leffler(0.5, -x) - erfcx(x)) for x in xs),
               max(abs(mittag_leffler(1.0, -x) - math.exp(-x)) for x in xs))


def _classical_kappa():
    sys_ = EigenSystem.classical(1.0)
    return max(abs(sys_.kappa(m) - 1.0) for m in range(1, 21))


def build_checks(args) -> List[Check]:
    fams = ["classical", "smallpert", "gausslag"] if args.family == "all" else [args.family]
    checks: List[Check] = []
    if "classical" in fams:
        checks.append(Check(f"biorthogonality classical(beta={args.beta:g}) n<=20",
                            _biorth(EigenSystem.classical(args.beta), 20), 1e-8))
        checks.append(Check("condition number classical = 1, m<=20", _classical_kappa, 1e-8))
    if "smallpert" in fams:
        bs = [args.b] if args.b is not None else [1.5, 2.0, 4.0]
        for b in bs:
            checks.append(Check(f"biorthogonality smallpert(b={b:g}) n<=10",
                                _biorth(EigenSystem.smallpert(b), 10), 1e-6))
    if "gausslag" in fams:
        pairs = ([(args.alpha, args.b)] if args.alpha is not None and args.b is not None
                 else [(0.6, 1.0), (0.4, 2.0)])
        for a, b in pairs:
            checks.append(Check(f"biorthogonality gausslag(alpha={a:g},b={b:g}) n<=6",
                                _biorth(EigenSystem.gausslag(a, b), 6), 1e-5))
    specs = ([args.sub] if args.sub is not None else
             [SubordinatorSpec.stable(a) for a in (0.3, 0.5, 0.8)]
             + [SubordinatorSpec.poisson(th) for th in (1.0, 3.0)])
    for sp in specs:
        checks.append(Check(f"remark-1 identity {sp}", _remark1(sp), 1e-6))
    for sp in specs[:1] + [s for s in specs if s.kind == "poisson"][:1]:
        checks.append(Check(f"eta Laplace consistency {sp}", _eta_laplace(sp), 1e-6))
    if args.sub is None:
        alphas = (0.5, 0.7)
    else:
        alphas = (args.sub.alpha,) if args.sub.kind == "stable" else ()
    for a in alphas:
        checks.append(Check(f"stable asymptotic ratio alpha={a:g} t=1e4", _asym_ratio(a), 0.02))
    if args.sub is None:
        checks.append(Check("bochner with pure drift equals markov", _degeneration("bochner"),
                            1e-14))
        checks.append(Check("inverse with pure drift equals markov", _degeneration("inverse"),
                            1e-10))
        checks.append(Check("mittag-leffler closed forms", _ml_check, 1e-10))
    return checks


def cmd_validate(args) -> int:
    checks = build_checks(args)
    if args.tolerance is not None:
        for c in checks:
            c.tol = args.tolerance

    def run(c: Check):
        t0 = time.perf_counter()
        try:
            res, err = c.run(), None
        except Exception as exc:  # a crashing check is a failed check
            res, err = float("nan"), f"{type(exc).__name__}: {exc}"
        return c, res, err, time.perf_counter() - t0

    results = _pmap(run, checks, args.threads)
    failed = 0
    for c, res, err, dt in results:
        ok = err is None and res < c.tol
        failed += not ok
        tail = f"  error={err}" if err else ""
        print(f"{'PASS' if ok else 'FAIL'}  {c.name}: residual={fmt(res)} tol={fmt(c.tol)} "
              f"({dt:.2f}s){tail}")
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 1 if failed else 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _common(p):
    p.add_argument("--config", help="key = value file or JSON manifest (flags take precedence)")
    p.add_argument("--seed", type=int, default=12345, help="master seed (default 12345)")
    p.add_argument("--threads", type=int, default=1, help="worker threads (default 1)")


def build_parser():
    ap = argparse.ArgumentParser(prog="spcorr", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    subs = {}

    p = subs["corr"] = sub.add_parser("corr", help="evaluate correlation functions on a (t,s) grid")
    _common(p)
    p.add_argument("--family", choices=["classical", "smallpert", "gausslag"], default="classical")
    p.add_argument("--beta", type=positive_float, default=1.0, help="classical family parameter")
    p.add_argument("--b", type=float, default=2.0, help="smallpert / gausslag parameter b")
    p.add_argument("--alpha", type=float, default=0.6, help="gausslag parameter alpha")
    p.add_argument("--regime", choices=["markov", "bochner", "inverse"], default="markov")
    p.add_argument("--pairing", choices=["PP", "PV"], default="PV")
    p.add_argument("--sub", type=sub_spec, default=None, help="subordinator, e.g. stable:0.5")
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--t", type=float_list, default=(1.0,), help="comma-separated times t")
    p.add_argument("--s", type=float_list, default=(0.0,), help="comma-separated times s")
    p.add_argument("--out", default="-", help="output CSV (default stdout)")
    p.set_defaults(func=cmd_corr)

    p = subs["simulate"] = sub.add_parser("simulate", help="Monte-Carlo paths of the CIR diffusion")
    _common(p)
    p.add_argument("--regime", choices=["markov", "bochner", "inverse"], default="markov")
    p.add_argument("--sub", type=sub_spec, default=None)
    p.add_argument("--beta", type=positive_float, default=1.0)
    p.add_argument("--sigma2", type=positive_float, default=1.0)
    p.add_argument("--paths", type=int, default=10000)
    p.add_argument("--grid", type=float_list, default=(0.0, 1.0), help="comma-separated times")
    p.add_argument("--dt", type=positive_float, default=1e-3,
                   help="operational step for generic first passages")
    p.add_argument("--out", required=False, default=None, help="paths CSV")
    p.add_argument("--manifest", default=None, help="manifest JSON (default OUT.manifest.json)")
    p.add_argument("--summary", default=None, help="optional lag-correlation summary CSV")
    p.add_argument("--summary-m", type=int_list, default=(1,), dest="summary_m")
    p.set_defaults(func=cmd_simulate)

    p = subs["estimate"] = sub.add_parser("estimate", help="condition numbers and verdicts")
    _common(p)
    p.add_argument("--input", default=None, help="sample CSV (path_id,t,value or value)")
    p.add_argument("--candidates", type=lambda s: tuple(c for c in s.split(",") if c.strip()),
                   default=("classical:1", "smallpert:2"),
                   help="comma-separated classical:BETA, smallpert:B, gausslag:ALPHA:B")
    p.add_argument("--m", type=int_list, default=(1, 2, 3, 4, 5), help="indices for the symmetry test")
    p.add_argument("--jump-m", type=int_list, default=(1, 2, 3, 4, 5, 6, 7, 8), dest="jump_m")
    p.add_argument("--range-m", type=int, default=1, dest="range_m")
    p.add_argument("--lag-from", type=int, default=0, dest="lag_from",
                   help="reference time index j for g(k)")
    p.add_argument("--eps", type=positive_float, default=None,
                   help="symmetry threshold (default 3 x SE of kappa_hat)")
    p.add_argument("--g-input", default=None, dest="g_input", help="lag,g CSV to classify")
    p.add_argument("--g-output", default=None, dest="g_output", help="write the g sequence here")
    p.add_argument("--out", default="-", help="output JSON (default stdout)")
    p.set_defaults(func=cmd_estimate)

    p = subs["validate"] = sub.add_parser("validate", help="run the invariant suite")
    _common(p)
    p.add_argument("--family", choices=["all", "classical", "smallpert", "gausslag"], default="all")
    p.add_argument("--beta", type=positive_float, default=1.0)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--b", type=float, default=None)
    p.add_argument("--sub", type=sub_spec, default=None)
    p.add_argument("--tolerance", type=float, default=None,
                   help="override every check tolerance")
    p.set_defaults(func=cmd_validate)
    return ap, subs


def _apply_config(ap, subs, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config or known.command not in subs:
        return
    cfg = load_config(known.config)
    sp = subs[known.command]
    dests = {a.dest for a in sp._actions}
    unknown = sorted(set(cfg) - dests - {"config", "command"})
    if unknown:
        raise CLIError(f"{known.config}: unknown keys for {known.command}: {', '.join(unknown)}")
    sp.set_defaults(**{k: v for k, v in cfg.items() if k in dests and k != "config"})


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap, subs = build_parser()
    try:
        _apply_config(ap, subs, argv)
        args = ap.parse_args(argv)
        if args.threads < 1:
            raise CLIError("--threads must be at least 1")
        if getattr(args, "tolerance", None) is not None and not args.tolerance >= 0:
            raise CLIError("--tolerance must be nonnegative")
        return args.func(args)
    except CLIError as exc:
        print(f"spcorr: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
