"""Mixing-time scaling of one-step HMC in kappa and d.

Every grid cell runs an ensemble of chains on the hard instance from warm
starts at the automatic step size, and records the first checkpoint at
which the pooled ensemble looks stationary: the worst per-coordinate
Kolmogorov distance to the analytic marginals drops below `ks_threshold`
plus the Bonferroni-corrected 99% noise floor of `n_chains` samples.
"""
from __future__ import annotations

import logging
import math
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product

import numpy as np
from expression import pipe
from expression.collections import Block
from pydantic import BaseModel, ConfigDict, Field, field_validator

from lshmc.core.error import unwrap
from lshmc.core.hmc import default_step_size
from lshmc.core.target import TargetDensity, TargetKind, TargetSpec, make_target
from lshmc.core.typing import FloatArray
from lshmc.diagnostics.claims import ClaimCheck, check_upper
from lshmc.diagnostics.marginals import coordinate_cdfs
from lshmc.diagnostics.stats import kolmogorov_critical, ks_distance
from lshmc.sampler.driver import iteration_budget, run_ensemble, warm_starts
from lshmc.sampler.streams import EnsembleNoise, spawn_generators


logger = logging.getLogger(__name__)

CHECKPOINT_RATIO = 1.05
NOISE_LEVEL = 0.01
SLOPE_TOLERANCE = 0.3


class ScalingRunSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    kappas: list[float] = Field(default_factory=lambda: [1.0, 4.0, 16.0, 64.0], min_length=1)
    dims: list[int] = Field(default_factory=lambda: [16], min_length=1)
    eps: float = Field(default=0.1, gt=0.0, le=1.0)
    ks_threshold: float = Field(default=0.05, gt=0.0, lt=1.0)
    max_iters: int = Field(default=2_000_000, ge=1)
    n_chains: int = Field(default=256, ge=2)
    C: float = Field(default=1.0, gt=0.0)
    seed: int = Field(default=0, ge=0, lt=2**64)

    @field_validator("kappas")
    @classmethod
    def _kappas(cls, values: list[float]) -> list[float]:
        if any(k < 1.0 for k in values):
            raise ValueError("condition numbers must be at least 1")
        return values

    @field_validator("dims")
    @classmethod
    def _dims(cls, values: list[int]) -> list[int]:
        if any(d < 1 for d in values):
            raise ValueError("dimensions must be at least 1")
        return values


class ScalingRow(BaseModel):
    """One grid cell.

    `k_hat` is None when the cell did not mix within `max_iters`. `ks_limit`
    is the worst-coordinate Kolmogorov distance the cell had to reach:
    `ks_threshold` plus the noise floor of `n_chains` samples.
    """

    model_config = ConfigDict(frozen=True)

    kappa: float
    dim: int
    eta: float
    k_hat: int | None = None
    accept_rate: float
    resolved: bool
    k_budget: int
    ks_final: float
    ks_limit: float


@dataclass(frozen=True)
class ScalingSlopes:
    """Log-log slopes of k_hat, against kappa per dimension and against d per kappa."""

    kappa: dict[int, float] = field(default_factory=dict)
    dim: dict[float, float] = field(default_factory=dict)


def checkpoint_grid(max_iters: int, ratio: float = CHECKPOINT_RATIO) -> list[int]:
    """0, 1, 2, ... growing geometrically by `ratio`, ending at `max_iters`."""
    points = {0, max_iters}
    t = 1.0
    while t < max_iters:
        points.add(math.ceil(t))
        t = max(t * ratio, t + 1.0)
    return sorted(p for p in points if p <= max_iters)


def mixing_limit(spec: ScalingRunSpec, dim: int) -> float:
    """`ks_threshold` plus the 99% Kolmogorov critical value, Bonferroni-corrected over `dim` coordinates."""
    return spec.ks_threshold + kolmogorov_critical(spec.n_chains, NOISE_LEVEL / dim)


def _worst_ks(xs: FloatArray, cdfs: list[Callable[[FloatArray], FloatArray]]) -> float:
    return max(ks_distance(xs[:, i], cdf) for i, cdf in enumerate(cdfs))


def _cell_seed(seed: int, cell: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(cell,)).generate_state(1, np.uint64)[0])


def _cell(spec: ScalingRunSpec, cell: int, kappa: float, dim: int) -> ScalingRow:
    target: TargetDensity = unwrap(make_target(TargetSpec(TargetKind.Hard(kappa, dim))))
    eta = pipe(default_step_size(target.smoothness, dim, kappa, spec.eps), unwrap).eta
    k_budget, _ = iteration_budget(kappa, dim, spec.eps, spec.C)
    cdfs = unwrap(coordinate_cdfs(target))
    limit = mixing_limit(spec, dim)

    generators = spawn_generators(_cell_seed(spec.seed, cell), spec.n_chains)
    x0 = warm_starts(target, generators)
    noise = EnsembleNoise(generators, dim)

    found: list[int] = []
    last = [math.inf]

    def observe(step: int, xs: FloatArray) -> bool:
        last[0] = _worst_ks(xs, cdfs)
        logger.debug("kappa=%g d=%d step %d: worst KS %.4f (limit %.4f)", kappa, dim, step, last[0], limit)
        if last[0] <= limit:
            found.append(step)
            return True
        return False

    logger.info("scaling cell kappa=%g d=%d: eta=%.4g, budget %d", kappa, dim, eta, k_budget)
    trace = run_ensemble(
        target, eta, x0, spec.max_iters, noise, checkpoints=checkpoint_grid(spec.max_iters), observer=observe
    )
    steps = int(trace.steps.sum())
    accept_rate = float(trace.accepted.sum()) / steps if steps else 1.0
    resolved = bool(found)
    if not resolved:
        logger.warning("kappa=%g d=%d did not mix within %d iterations", kappa, dim, spec.max_iters)
    return ScalingRow(
        kappa=kappa,
        dim=dim,
        eta=eta,
        k_hat=found[0] if resolved else None,
        accept_rate=accept_rate,
        resolved=resolved,
        k_budget=k_budget,
        ks_final=last[0],
        ks_limit=limit,
    )


def scaling_study(spec: ScalingRunSpec, threads: int = 1) -> Block[ScalingRow]:
    """Rows ordered by (kappa, d) as given in `spec`, whatever the thread count."""
    cells = list(product(spec.kappas, spec.dims))

    def run(indexed: tuple[int, tuple[float, int]]) -> ScalingRow:
        cell, (kappa, dim) = indexed
        return _cell(spec, cell, kappa, dim)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        return Block(pool.map(run, enumerate(cells)))


def _slope(xs: list[float], ys: list[float]) -> float:
    slope, _ = np.polyfit(np.log(xs), np.log(ys), 1)
    return float(slope)


def fit_scaling_slopes(rows: Block[ScalingRow]) -> ScalingSlopes:
    """Slopes of log k_hat over resolved rows.

    Rows with kappa = 1 start exactly at the target and are left out, as
    are groups with fewer than two usable rows.
    """
    usable = rows.filter(lambda row: row.k_hat is not None and row.k_hat > 0 and row.kappa > 1.0)
    by_dim: dict[int, float] = {}
    by_kappa: dict[float, float] = {}
    for dim in sorted({row.dim for row in usable}):
        group = sorted((row for row in usable if row.dim == dim), key=lambda row: row.kappa)
        if len({row.kappa for row in group}) >= 2:
            by_dim[dim] = _slope([row.kappa for row in group], [float(row.k_hat or 0) for row in group])
    for kappa in sorted({row.kappa for row in usable}):
        group = sorted((row for row in usable if row.kappa == kappa), key=lambda row: row.dim)
        if len({row.dim for row in group}) >= 2:
            by_kappa[kappa] = _slope([float(row.dim) for row in group], [float(row.k_hat or 0) for row in group])
    return ScalingSlopes(kappa=by_dim, dim=by_kappa)


def scaling_claims(rows: Block[ScalingRow]) -> Block[ClaimCheck]:
    unresolved = len(rows.filter(lambda row: not row.resolved))
    claims = [check_upper("scaling-resolved", "every grid cell mixes within max_iters", float(unresolved), 0.0)]
    slopes = fit_scaling_slopes(rows)
    for dim, slope in slopes.kappa.items():
        claims.append(
            check_upper(
                f"scaling-slope-kappa-d{dim}",
                f"d = {dim}: log-log slope of k_hat against kappa within 1 +/- 0.3",
                abs(slope - 1.0),
                SLOPE_TOLERANCE,
            )
        )
    for kappa, slope in slopes.dim.items():
        claims.append(
            check_upper(
                f"scaling-slope-dim-kappa{kappa:g}",
                f"kappa = {kappa:g}: log-log slope of k_hat against d within 1 +/- 0.3",
                abs(slope - 1.0),
                SLOPE_TOLERANCE,
            )
        )
    return Block(claims)


__all__ = [
    "ScalingRow",
    "ScalingRunSpec",
    "ScalingSlopes",
    "checkpoint_grid",
    "fit_scaling_slopes",
    "mixing_limit",
    "scaling_claims",
    "scaling_study",
]
