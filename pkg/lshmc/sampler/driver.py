"""Sampling runs built on the one-step kernel.

Chains start from the warm start N(x*, I/L). The averaged sampler runs a
chain for a uniformly random number of steps j in {0, ..., k - 1}, so its
output law is the average of the first k iterate laws. The boosted
sampler repeats the averaged sampler `outer_rounds` times, restarting each
round from the previous round's output point.
"""
from __future__ import annotations

import logging
import math
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from expression import Nothing, Option, Some, pipe
from expression.collections import Block

from lshmc.core.error import InvalidStateError, SpecError, unwrap
from lshmc.core.hmc import default_step_size, metropolis_accept, proposal_step
from lshmc.core.target import TargetDensity
from lshmc.core.typing import BoolArray, FloatArray, IntArray, as_vector

from .config import HmcConfig
from .streams import EnsembleNoise, chain_generator, spawn_generators, thinning


logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ChainResult:
    """Trajectory of a single chain.

    `samples`, `iterations` and `grad_norms` hold the recorded iterates,
    always including x0 at iteration 0. `accept_flags`, `delta_h` and
    `invalid` hold one entry per step.
    """

    samples: FloatArray
    iterations: IntArray
    accept_flags: BoolArray
    delta_h: FloatArray
    invalid: BoolArray
    grad_norms: FloatArray
    final_x: FloatArray
    seed: int
    chain: int = 0

    @property
    def n_steps(self) -> int:
        return len(self.accept_flags)

    @property
    def accept_rate(self) -> float:
        """Fraction of accepted steps, 1.0 for an empty run."""
        return float(np.mean(self.accept_flags)) if self.n_steps else 1.0


@dataclass(frozen=True)
class WarmnessReport:
    """Log of the warmness bound beta = kappa^(d/2) of the warm start."""

    log_beta: float
    eps: float
    log_beta_over_eps: float


@dataclass(frozen=True, eq=False)
class EnsembleTrace:
    x: FloatArray
    accepted: IntArray
    steps: IntArray
    nan_rejections: int
    stopped_at: int


def warm_start(target: TargetDensity, rng: np.random.Generator) -> FloatArray:
    """A draw x* + z / sqrt(L) from N(x*, I/L)."""
    return target.minimizer + rng.standard_normal(target.dim) / math.sqrt(target.smoothness)


def warm_starts(target: TargetDensity, generators: list[np.random.Generator]) -> FloatArray:
    """One warm start per generator, stacked to shape (n, d)."""
    return np.stack([warm_start(target, gen) for gen in generators])


def log_warmness(target: TargetDensity, eps: float = 1.0) -> WarmnessReport:
    """log beta = (d/2) log kappa, and log(beta / eps)."""
    log_beta = 0.5 * target.dim * math.log(target.kappa)
    return WarmnessReport(log_beta, eps, log_beta - math.log(eps))


def exact_log_warmness(target: TargetDensity) -> Option[float]:
    """Exact sup log density ratio of the warm start for Gaussian targets.

    For precision D the ratio N(x*, I/L) / N(x*, D^-1) peaks at x* where it
    equals prod sqrt(L / lambda_i), never more than kappa^(d/2).
    """
    match target.precision:
        case Option(tag="some", some=precision):
            return Some(float(0.5 * np.sum(np.log(target.smoothness / precision))))
        case _:
            return Nothing


def iteration_budget(kappa: float, d: int, eps: float, C: float = 1.0) -> tuple[int, int]:
    """Inner steps and outer rounds for accuracy `eps`.

    k_inner = ceil(C kappa d max(1, log(kappa/eps)) max(1, log(d max(1, log(kappa/eps)))))
    and rounds = ceil(max(1, log(1/eps))). The constant C is not known in
    closed form; the scaling study reports measured steps against it.
    """
    if not kappa >= 1.0:
        raise SpecError(f"condition number must be at least 1, got {kappa}")
    if not 0.0 < eps <= 1.0:
        raise SpecError(f"accuracy must lie in (0, 1], got {eps}")
    if not C > 0.0:
        raise SpecError(f"budget constant must be positive, got {C}")
    log_term = max(1.0, math.log(kappa / eps))
    k_inner = math.ceil(C * kappa * d * log_term * max(1.0, math.log(d * log_term)))
    rounds = math.ceil(max(1.0, math.log(1.0 / eps)))
    return k_inner, rounds


def auto_config(
    target: TargetDensity,
    eps: float,
    *,
    C: float = 1.0,
    seed: int = 0,
    n_chains: int = 1,
    eta: float | None = None,
) -> HmcConfig:
    """Configuration from the step-size rule and the iteration budget."""
    if eta is None:
        eta = pipe(
            default_step_size(target.smoothness, target.dim, target.kappa, eps),
            unwrap,
        ).eta
    k_inner, rounds = iteration_budget(target.kappa, target.dim, eps, C)
    return HmcConfig(eta=eta, eps=eps, k=k_inner, outer_rounds=rounds, seed=seed, n_chains=n_chains)


def run_ensemble(
    target: TargetDensity,
    eta: float,
    x0: FloatArray,
    n_steps: int,
    noise: EnsembleNoise,
    *,
    stops: IntArray | None = None,
    checkpoints: Iterable[int] = (),
    observer: Callable[[int, FloatArray], bool] | None = None,
) -> EnsembleTrace:
    """Advance all chains of an ensemble together.

    Args:
        target: The target density.
        eta: Leapfrog step size.
        x0: Starting points, shape (n, d).
        n_steps: Number of steps to run.
        noise: Per-chain random streams.
        stops: Optional per-chain step counts; chain i is frozen after
            stops[i] steps while its stream keeps advancing.
        checkpoints: Ascending step counts at which `observer` is called
            with the current positions. Returning True ends the run.
        observer: Callback for checkpoints.
    """
    x = as_vector(x0, target.dim).copy()
    n = x.shape[0]
    accepted = np.zeros(n, dtype=np.int64)
    steps = np.zeros(n, dtype=np.int64)
    nan_rejections = 0
    pending = iter(sorted(checkpoints))
    next_check = next(pending, None)

    step = 0
    while True:
        if observer is not None and next_check is not None and step >= next_check:
            while next_check is not None and next_check <= step:
                next_check = next(pending, None)
            if observer(step, x):
                break
        if step >= n_steps:
            break

        v, log_u = noise.next()
        proposal, delta_h = proposal_step(target, eta, x, v)
        if not np.all(np.isfinite(proposal.x)):
            raise InvalidStateError("non-finite leapfrog state", step)
        move = metropolis_accept(delta_h, log_u)
        nan_rejections += int(np.count_nonzero(np.isnan(delta_h)))
        if stops is not None:
            live = step < stops
            move &= live
            steps += live
        else:
            steps += 1
        accepted += move
        x = np.where(move[:, None], proposal.x, x)
        step += 1

    if nan_rejections:
        logger.warning("%d NaN energy changes were rejected", nan_rejections)
    return EnsembleTrace(x, accepted, steps, nan_rejections, step)


def run_chain(target: TargetDensity, cfg: HmcConfig, x0: FloatArray, chain: int = 0) -> ChainResult:
    """Run `cfg.k` HMC steps from `x0` on stream `chain` of `cfg.seed`."""
    x = as_vector(x0, target.dim, name="x0").copy()
    if not np.all(np.isfinite(x)):
        raise InvalidStateError("non-finite starting point", 0)
    k = cfg.k
    every = cfg.record_every or thinning(k, target.dim)
    if cfg.record_every is None and every > 1:
        logger.warning("thinning chain %d to every %d iterates", chain, every)

    noise = EnsembleNoise([chain_generator(cfg.seed, chain)], target.dim)
    accept_flags = np.zeros(k, dtype=np.bool_)
    delta_h = np.zeros(k)
    samples = [x.copy()]
    iterations = [0]

    for i in range(k):
        v, log_u = noise.next()
        proposal, dh = proposal_step(target, cfg.eta, x, v[0])
        if not np.all(np.isfinite(proposal.x)) or not np.all(np.isfinite(proposal.v)):
            raise InvalidStateError("non-finite leapfrog state", i)
        delta_h[i] = dh
        if bool(metropolis_accept(dh, log_u[0])):
            accept_flags[i] = True
            x = proposal.x
        if (i + 1) % every == 0:
            samples.append(x.copy())
            iterations.append(i + 1)

    invalid = np.isnan(delta_h)
    if invalid.any():
        logger.warning("chain %d rejected %d NaN energy changes", chain, int(invalid.sum()))
    recorded = np.stack(samples)
    result = ChainResult(
        samples=recorded,
        iterations=np.asarray(iterations, dtype=np.int64),
        accept_flags=accept_flags,
        delta_h=delta_h,
        invalid=invalid,
        grad_norms=np.linalg.norm(target.grad(recorded), axis=-1),
        final_x=x,
        seed=cfg.seed,
        chain=chain,
    )
    logger.debug("chain %d finished %d steps, accept rate %.4f", chain, k, result.accept_rate)
    return result


def run_chains(
    target: TargetDensity, cfg: HmcConfig, x0s: FloatArray | None = None, threads: int = 1
) -> Block[ChainResult]:
    """Run `cfg.n_chains` independent chains, ordered by chain index.

    Without explicit starting points chain i starts from a warm start
    drawn from its own stream seeded by (cfg.seed + 1, i).
    """
    if x0s is None:
        x0s = warm_starts(target, spawn_generators(cfg.seed + 1, cfg.n_chains))
    starts = as_vector(x0s, target.dim, name="x0s")
    if starts.shape[0] != cfg.n_chains:
        raise SpecError(f"got {starts.shape[0]} starting points for {cfg.n_chains} chains")

    def run(chain: int) -> ChainResult:
        return run_chain(target, cfg, starts[chain], chain)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        return Block(pool.map(run, range(cfg.n_chains)))


def averaged_sample(target: TargetDensity, cfg: HmcConfig, x0: FloatArray, rng: np.random.Generator) -> FloatArray:
    """Endpoint after j ~ Uniform{0, ..., k-1} steps from `x0`.

    The stopping time is drawn from `rng` before any step randomness.
    """
    if cfg.k < 1:
        raise SpecError("the averaged sampler needs k >= 1")
    noise = EnsembleNoise([rng], target.dim)
    j = int(noise.integers(cfg.k)[0])
    start = as_vector(x0, target.dim, name="x0")[None, :]
    return run_ensemble(target, cfg.eta, start, j, noise).x[0]


def boosted_sample(target: TargetDensity, cfg: HmcConfig, rng: np.random.Generator) -> FloatArray:
    """Warm start followed by `cfg.outer_rounds` averaged-sampler rounds."""
    x = warm_start(target, rng)
    for _ in range(cfg.outer_rounds):
        x = averaged_sample(target, cfg, x, rng)
    return x


def boosted_samples(target: TargetDensity, cfg: HmcConfig, n: int | None = None) -> FloatArray:
    """`n` independent boosted draws (default `cfg.n_chains`), shape (n, d).

    All replicates advance together as one ensemble on the streams of
    `cfg.seed`. With a single round replicate i equals `boosted_sample` on
    stream i; later rounds start after whole noise blocks drawn past each
    replicate's stopping time, so they agree with it in law only.
    """
    if cfg.k < 1:
        raise SpecError("the averaged sampler needs k >= 1")
    generators = spawn_generators(cfg.seed, n or cfg.n_chains)
    x = warm_starts(target, generators)
    noise = EnsembleNoise(generators, target.dim)
    for round_ in range(cfg.outer_rounds):
        stops = noise.integers(cfg.k)
        trace = run_ensemble(target, cfg.eta, x, int(stops.max()), noise, stops=stops)
        x = trace.x
        logger.debug("boosting round %d: %d accepted of %d steps", round_, trace.accepted.sum(), trace.steps.sum())
    return x


__all__ = [
    "ChainResult",
    "EnsembleTrace",
    "WarmnessReport",
    "auto_config",
    "averaged_sample",
    "boosted_sample",
    "boosted_samples",
    "exact_log_warmness",
    "iteration_budget",
    "log_warmness",
    "run_chain",
    "run_chains",
    "run_ensemble",
    "warm_start",
    "warm_starts",
]
