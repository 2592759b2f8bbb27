"""Monte-Carlo ensembles of the classical Laguerre (CIR) diffusion under the
three clocks: identity, a subordinator ``T_t`` (Bochner) and an inverse
subordinator ``L_t``.

With ``sigma2 = 1`` the generator ``x f'' + (beta + 1 - x) f'`` is the CIR
process ``dX = (beta + 1 - X) dt + sqrt(2 X) dW``, stationary under
Gamma(beta + 1, 1).  Transitions are sampled exactly through the
Poisson-Gamma mixture form of the noncentral chi-squared law, so the only
approximation left is the subordinator sampler for generic specs.

Reproducibility: paths are simulated in fixed blocks of ``block_paths``
paths, each block with its own generator seeded from
``SeedSequence(seed, spawn_key=(block,))``.  A path's values therefore depend
only on the master seed and the path index, never on the number of worker
threads or on the total number of paths requested.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional, Tuple

import numpy as np

from .subordinate import SubordinatorSpec, sample_increments, sample_inverse_grid

__all__ = [
    "SimConfig",
    "SamplePathSet",
    "cir_transition",
    "simulate_cir_stationary",
    "simulate_bochner",
    "simulate_inverse_tc",
    "simulate",
]


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings.

    ``regime`` is ``markov``, ``bochner`` or ``inverse``.  ``dt`` is only
    used by the generic-subordinator first-passage walk.
    """

    paths: int
    seed: int
    grid: Tuple[float, ...]
    regime: str = "markov"
    beta: float = 1.0
    sigma2: float = 1.0
    spec: Optional[str] = None
    dt: float = 1e-3
    block_paths: int = 1000
    threads: int = 1

    def __post_init__(self):
        g = tuple(float(v) for v in self.grid)
        object.__setattr__(self, "grid", g)
        if self.paths < 1:
            raise ValueError("paths must be at least 1")
        if not g or any(v < 0 for v in g) or any(b < a for a, b in zip(g, g[1:])):
            raise ValueError("grid must be a nonempty sorted list of nonnegative times")
        if self.regime not in ("markov", "bochner", "inverse"):
            raise ValueError(f"unknown regime {self.regime!r}")
        if self.regime != "markov" and not self.spec:
            raise ValueError(f"regime {self.regime!r} needs a subordinator spec")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")
        if self.block_paths < 1 or self.threads < 1:
            raise ValueError("block_paths and threads must be positive")

    def subordinator(self) -> Optional[SubordinatorSpec]:
        return SubordinatorSpec.parse(self.spec) if self.spec else None

    def as_dict(self):
        d = asdict(self)
        d["grid"] = list(self.grid)
        return d


@dataclass(frozen=True)
class SamplePathSet:
    """``values[i, j]`` is path ``i`` at ``grid[j]``; ``clock`` holds the
    operational times at which the diffusion was observed."""

    values: np.ndarray
    grid: np.ndarray
    config: SimConfig
    clock: np.ndarray
    substream: np.ndarray


def cir_transition(x, dt, beta: float, rng: np.random.Generator, sigma2: float = 1.0):
    """Exact CIR step for ``dX = (beta + sigma2 - X) dt + sqrt(2 sigma2 X) dW``.

    ``X_dt = 2c G`` with ``c = sigma2 (1 - e^{-dt}) / 2``,
    ``G ~ Gamma(d/2 + N, 1)``, ``N ~ Poisson(x e^{-dt} / (2c))`` and
    ``d = 2 (beta + sigma2) / sigma2``.  Zero steps leave ``x`` unchanged.
    """
    x = np.asarray(x, dtype=float)
    dt = np.broadcast_to(np.asarray(dt, dtype=float), x.shape)
    out = x.copy()
    move = dt > 0
    if not np.any(move):
        return out
    d = 2.0 * (beta + sigma2) / sigma2
    h = dt[move]
    c = 0.5 * sigma2 * -np.expm1(-h)
    lam = x[move] * np.exp(-h) / c
    n = rng.poisson(0.5 * lam)
    out[move] = 2.0 * c * rng.gamma(0.5 * d + n, 1.0)
    return out


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block,))))


def _simulate_block(cfg: SimConfig, block: int):
    rng = _block_rng(cfg.seed, block)
    n = cfg.block_paths
    grid = np.asarray(cfg.grid)
    spec = cfg.subordinator()
    if cfg.regime == "markov":
        clock = np.broadcast_to(grid, (n, grid.size)).copy()
    elif cfg.regime == "bochner":
        steps = np.diff(grid)
        incr = sample_increments(spec, np.broadcast_to(steps, (n, steps.size)), rng)
        clock = np.concatenate([np.zeros((n, 1)), np.cumsum(incr, axis=1)], axis=1)
    else:
        clock = sample_inverse_grid(spec, grid, n, rng, dt=cfg.dt)
    shape = (cfg.beta + cfg.sigma2) / cfg.sigma2
    x = rng.gamma(shape, cfg.sigma2, n)
    vals = np.empty((n, grid.size))
    vals[:, 0] = x
    for j in range(1, grid.size):
        x = cir_transition(x, clock[:, j] - clock[:, j - 1], cfg.beta, rng, cfg.sigma2)
        vals[:, j] = x
    return vals, clock


def simulate(cfg: SimConfig) -> SamplePathSet:
    """Run the configured regime (see the module notes on reproducibility)."""
    blocks = int(math.ceil(cfg.paths / cfg.block_paths))
    if cfg.threads > 1 and blocks > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as ex:
            parts = list(ex.map(lambda b: _simulate_block(cfg, b), range(blocks)))
    else:
        parts = [_simulate_block(cfg, b) for b in range(blocks)]
    vals = np.concatenate([p[0] for p in parts])[: cfg.paths]
    clock = np.concatenate([p[1] for p in parts])[: cfg.paths]
    sub = np.arange(cfg.paths) // cfg.block_paths
    return SamplePathSet(vals, np.asarray(cfg.grid), cfg, clock, sub)


def simulate_cir_stationary(config: SimConfig) -> SamplePathSet:
    """Stationary CIR paths observed on the grid (identity clock)."""
    if config.regime != "markov":
        config = _with(config, regime="markov", spec=None)
    return simulate(config)


def simulate_bochner(config: SimConfig, spec=None) -> SamplePathSet:
    """CIR paths run on the subordinator clock ``T_t``; stable steps are
    exact, generic specs use the compound-Poisson approximation."""
    return simulate(_with(config, regime="bochner", spec=_spec_text(spec, config)))


def simulate_inverse_tc(config: SimConfig, spec=None) -> SamplePathSet:
    """CIR paths run on the inverse-subordinator clock ``L_t``.

    Within a path ``L`` is nondecreasing, so the exact CIR transitions chain
    forward over the increments of ``L``.
    """
    return simulate(_with(config, regime="inverse", spec=_spec_text(spec, config)))


def _spec_text(spec, config):
    if spec is None:
        return config.spec
    if isinstance(spec, SubordinatorSpec):
        if not spec.label or spec.kind == "generic" and spec.label == "generic":
            raise ValueError("simulation needs a spec expressible as kind:params text")
        return spec.label
    return str(spec)


def _with(cfg: SimConfig, **kw) -> SimConfig:
    d = cfg.as_dict()
    d.update(kw)
    d["grid"] = tuple(d["grid"])
    return SimConfig(**d)
