"""One-leapfrog Metropolized Hamiltonian Monte Carlo.

Each step draws a fresh velocity v ~ N(0, I), takes a single leapfrog
step of the Hamiltonian H(x, v) = f(x) + |v|^2 / 2 and applies a
Metropolis filter on the energy change. With h = eta^2 / 2 this is the
same chain as MALA, which is provided alongside for comparison.

All kernels accept a single state of shape (d,) or a batch of shape
(n, d). The accept test is carried out in log space,
log u <= min(0, -dH), so huge energy changes never overflow.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from expression import Error, Ok, Result

from .error import SpecError
from .target import TargetDensity
from .typing import BoolArray, FloatArray, as_vector, ensure_finite


logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PhaseState:
    x: FloatArray
    v: FloatArray

    def flip(self) -> PhaseState:
        """Negate the velocity."""
        return PhaseState(self.x, -self.v)


@dataclass(frozen=True, eq=False)
class StepOutcome:
    """Result of one Metropolized step.

    For MALA steps `proposal.v` holds the standardized proposal noise,
    which is the velocity of the equivalent HMC step.
    """

    proposal: PhaseState
    accepted: bool
    delta_h: float
    next_x: FloatArray
    log_u: float
    invalid: bool = False


@dataclass(frozen=True)
class StepSizePolicy:
    eta: float
    derivation: Literal["explicit", "auto"]
    log_term: float

    @staticmethod
    def explicit(eta: float) -> StepSizePolicy:
        if not eta > 0.0:
            raise SpecError(f"step size must be positive, got {eta}")
        return StepSizePolicy(float(eta), "explicit", float("nan"))


def _kinetic(v: FloatArray) -> FloatArray:
    return 0.5 * np.sum(v * v, axis=-1)


def energy(target: TargetDensity, x: FloatArray, v: FloatArray) -> FloatArray:
    """Batched Hamiltonian without finiteness checks."""
    return target.potential(x) + _kinetic(v)


def hamiltonian(target: TargetDensity, s: PhaseState) -> float:
    """H(x, v) = f(x) + |v|^2 / 2."""
    value = float(energy(target, s.x, s.v))
    ensure_finite("hamiltonian", value)
    return value


def _leapfrog(target: TargetDensity, eta: float, x: FloatArray, v: FloatArray) -> tuple[FloatArray, FloatArray]:
    half = 0.5 * eta
    v_half = v - half * target.grad(x)
    x_new = x + eta * v_half
    v_new = v_half - half * target.grad(x_new)
    return x_new, v_new


def leapfrog(target: TargetDensity, eta: float, s: PhaseState) -> PhaseState:
    """Half kick, drift, half kick. Exactly two gradient evaluations."""
    if not eta > 0.0:
        raise SpecError(f"step size must be positive, got {eta}")
    x_new, v_new = _leapfrog(target, eta, s.x, s.v)
    ensure_finite("leapfrog state", x_new, v_new)
    return PhaseState(x_new, v_new)


def round_trip_error(target: TargetDensity, eta: float, x: FloatArray, v: FloatArray) -> FloatArray:
    """Relative error of leapfrog, flip, leapfrog, flip against the start, batched.

    Zero in exact arithmetic since the integrator is time reversible.
    """
    x1, v1 = _leapfrog(target, eta, x, v)
    x2, v2 = _leapfrog(target, eta, x1, -v1)
    start = np.concatenate([x, v], axis=-1)
    error = np.concatenate([x2 - x, -v2 - v], axis=-1)
    return np.linalg.norm(error, axis=-1) / np.maximum(1.0, np.linalg.norm(start, axis=-1))


def log_accept_probability(delta_h: FloatArray | float) -> FloatArray:
    """min(0, -dH), with NaN mapped to -inf."""
    dh = np.asarray(delta_h, dtype=np.float64)
    return np.where(np.isnan(dh), -np.inf, np.minimum(0.0, -dh))


def metropolis_accept(delta_h: FloatArray | float, log_u: FloatArray | float) -> BoolArray:
    """Accept iff log u <= min(0, -dH). NaN energy changes are rejected."""
    return np.asarray(log_u) <= log_accept_probability(delta_h)


def proposal_step(target: TargetDensity, eta: float, x: FloatArray, v: FloatArray) -> tuple[PhaseState, FloatArray]:
    """Leapfrog proposal and its energy change, batched."""
    x_new, v_new = _leapfrog(target, eta, x, v)
    delta_h = energy(target, x_new, v_new) - energy(target, x, v)
    return PhaseState(x_new, v_new), delta_h


def hmc_transition(target: TargetDensity, eta: float, x: FloatArray, v: FloatArray, log_u: float) -> StepOutcome:
    """One HMC step with the velocity and uniform supplied by the caller."""
    x = as_vector(x, target.dim, name="position")
    v = as_vector(v, target.dim, name="velocity")
    ensure_finite("position", x)
    proposal = leapfrog(target, eta, PhaseState(x, v))
    delta_h = float(energy(target, proposal.x, proposal.v) - energy(target, x, v))
    invalid = math.isnan(delta_h)
    if invalid:
        logger.warning("NaN energy change treated as rejection")
    accepted = bool(metropolis_accept(delta_h, log_u))
    return StepOutcome(proposal, accepted, delta_h, proposal.x if accepted else x, float(log_u), invalid)


def draw_log_uniform(rng: np.random.Generator) -> float:
    """log u for u uniform on (0, 1]."""
    return math.log1p(-float(rng.random()))


def hmc_step(target: TargetDensity, eta: float, x: FloatArray, rng: np.random.Generator) -> StepOutcome:
    """One step of Metropolized HMC drawing v, then u, from `rng`."""
    v = rng.standard_normal(target.dim)
    log_u = draw_log_uniform(rng)
    return hmc_transition(target, eta, x, v, log_u)


def mala_log_ratio(target: TargetDensity, h: float, x: FloatArray, x_new: FloatArray) -> FloatArray:
    """Log Metropolis-Hastings ratio of the Langevin proposal N(x - h grad f(x), 2h I)."""
    forward = x_new - x + h * target.grad(x)
    backward = x - x_new + h * target.grad(x_new)
    return (
        target.potential(x)
        - target.potential(x_new)
        + (np.sum(forward * forward, axis=-1) - np.sum(backward * backward, axis=-1)) / (4.0 * h)
    )


def mala_transition(target: TargetDensity, h: float, x: FloatArray, z: FloatArray, log_u: float) -> StepOutcome:
    """One MALA step with standardized noise `z` supplied by the caller."""
    if not h > 0.0:
        raise SpecError(f"MALA step must be positive, got {h}")
    x = as_vector(x, target.dim, name="position")
    z = as_vector(z, target.dim, name="noise")
    ensure_finite("position", x)
    x_new = x - h * target.grad(x) + math.sqrt(2.0 * h) * z
    ensure_finite("MALA proposal", x_new)
    delta_h = -float(mala_log_ratio(target, h, x, x_new))
    invalid = math.isnan(delta_h)
    if invalid:
        logger.warning("NaN MALA log ratio treated as rejection")
    accepted = bool(metropolis_accept(delta_h, log_u))
    return StepOutcome(PhaseState(x_new, z), accepted, delta_h, x_new if accepted else x, float(log_u), invalid)


def mala_step(target: TargetDensity, h: float, x: FloatArray, rng: np.random.Generator) -> StepOutcome:
    z = rng.standard_normal(target.dim)
    log_u = draw_log_uniform(rng)
    return mala_transition(target, h, x, z, log_u)


def quadratic_delta_h(
    precision: FloatArray, eta: float, x: FloatArray, x_new: FloatArray, minimizer: FloatArray | float = 0.0
) -> FloatArray:
    """Closed-form energy change for f(x) = 1/2 (x - x*)^T D (x - x*).

    dH = (eta^2 / 8) (y_new^T D^2 y_new - y^T D^2 y) with y = x - x*, a
    consequence of the leapfrog update on a quadratic potential. `minimizer`
    is x*; pass the target's minimizer for shifted Gaussians.
    """
    d2 = precision * precision
    y, y_new = x - minimizer, x_new - minimizer
    return (eta * eta / 8.0) * (np.sum(d2 * y_new * y_new, axis=-1) - np.sum(d2 * y * y, axis=-1))


@dataclass(frozen=True)
class EquivalenceReport:
    eta: float
    h: float
    n_trials: int
    max_discrepancy: float
    decision_mismatches: int
    tolerance: float

    @property
    def equivalent(self) -> bool:
        return self.max_discrepancy <= self.tolerance and self.decision_mismatches == 0


def check_equivalence(
    target: TargetDensity,
    eta: float,
    n_trials: int,
    seed: int,
    *,
    h: float | None = None,
    tolerance: float = 1e-10,
) -> EquivalenceReport:
    """Compare HMC and MALA log accept ratios under coupled randomness.

    For every trial a position x ~ x* + N(0, I/mu), a velocity v and a
    uniform u are drawn. HMC runs with (x, v); MALA runs with step `h`
    (default eta^2 / 2) and the same standardized noise, so at the default
    both propose the same point. The report holds the largest absolute
    difference between the two log ratios -dH.
    """
    if n_trials < 1:
        raise SpecError(f"n_trials must be at least 1, got {n_trials}")
    h = 0.5 * eta * eta if h is None else h
    rng = np.random.default_rng(seed)
    x = target.minimizer + rng.standard_normal((n_trials, target.dim)) / math.sqrt(target.strong_convexity)
    v = rng.standard_normal((n_trials, target.dim))
    log_u = np.log1p(-rng.random(n_trials))

    proposal, delta_h = proposal_step(target, eta, x, v)
    ensure_finite("leapfrog state", proposal.x, proposal.v)
    mala_x = x - h * target.grad(x) + math.sqrt(2.0 * h) * v
    mala_log = mala_log_ratio(target, h, x, mala_x)

    hmc_log = -delta_h
    discrepancy = float(np.max(np.abs(hmc_log - mala_log)))
    mismatches = int(np.sum(metropolis_accept(delta_h, log_u) != metropolis_accept(-mala_log, log_u)))
    return EquivalenceReport(eta, h, n_trials, discrepancy, mismatches, tolerance)


def default_step_size(L: float, d: int, kappa: float, eps: float) -> Result[StepSizePolicy, SpecError]:
    """Step size eta with eta^2 = 1 / (20 L d max(1, log(kappa / eps))).

    This sits at the largest step for which the one-step rejection
    probability is controlled on the high-probability region.
    """
    if not L > 0.0:
        return Error(SpecError(f"smoothness must be positive, got {L}"))
    if d < 1:
        return Error(SpecError(f"dimension must be at least 1, got {d}"))
    if not kappa >= 1.0:
        return Error(SpecError(f"condition number must be at least 1, got {kappa}"))
    if not 0.0 < eps <= 1.0:
        return Error(SpecError(f"accuracy must lie in (0, 1], got {eps}"))
    log_term = max(1.0, math.log(kappa / eps))
    eta = 1.0 / math.sqrt(20.0 * L * d * log_term)
    return Ok(StepSizePolicy(eta, "auto", log_term))


__all__ = [
    "EquivalenceReport",
    "PhaseState",
    "StepOutcome",
    "StepSizePolicy",
    "check_equivalence",
    "default_step_size",
    "draw_log_uniform",
    "energy",
    "hamiltonian",
    "hmc_step",
    "hmc_transition",
    "leapfrog",
    "log_accept_probability",
    "mala_log_ratio",
    "mala_step",
    "mala_transition",
    "metropolis_accept",
    "proposal_step",
    "quadratic_delta_h",
    "round_trip_error",
]
