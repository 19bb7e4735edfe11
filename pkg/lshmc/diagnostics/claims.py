"""Empirical checks of the quantitative bounds behind the sampler.

Every check produces a `ClaimCheck` record. Monte Carlo statistics carry
their standard error and pass when they are within three standard errors
of the bound.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from expression.collections import Block
from pydantic import BaseModel, ConfigDict, Field
from scipy import special

from lshmc.core.error import SpecError
from lshmc.core.hmc import log_accept_probability, proposal_step
from lshmc.core.target import TargetDensity
from lshmc.core.typing import BoolArray, FloatArray, as_vector

from .stats import MonteCarloEstimate, chi_sq_tail_bound, fraction_estimate, mean_estimate, partial_product


logger = logging.getLogger(__name__)

SE_SLACK = 3.0
OVERLAP_BOUND = 5.0 / 8.0
REJECTION_BOUND = 1.0 / 8.0


class ClaimCheck(BaseModel):
    """One checked bound.

    Serialized with the key `pass` for `passed`.
    """

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    claim_id: str
    anchor: str
    statistic: float
    bound: float
    standard_error: float | None = None
    passed: bool = Field(alias="pass")


def check_upper(
    claim_id: str, anchor: str, estimate: MonteCarloEstimate | float, bound: float, slack: float = SE_SLACK
) -> ClaimCheck:
    """Passes when statistic <= bound + slack * SE."""
    match estimate:
        case MonteCarloEstimate(value=value, standard_error=se):
            return ClaimCheck(
                claim_id=claim_id,
                anchor=anchor,
                statistic=value,
                bound=bound,
                standard_error=se,
                passed=value <= bound + slack * se,
            )
        case value:
            return ClaimCheck(claim_id=claim_id, anchor=anchor, statistic=value, bound=bound, passed=value <= bound)


def check_lower(
    claim_id: str, anchor: str, estimate: MonteCarloEstimate | float, bound: float, slack: float = SE_SLACK
) -> ClaimCheck:
    """Passes when statistic >= bound - slack * SE."""
    match estimate:
        case MonteCarloEstimate(value=value, standard_error=se):
            return ClaimCheck(
                claim_id=claim_id,
                anchor=anchor,
                statistic=value,
                bound=bound,
                standard_error=se,
                passed=value >= bound - slack * se,
            )
        case value:
            return ClaimCheck(claim_id=claim_id, anchor=anchor, statistic=value, bound=bound, passed=value >= bound)


@dataclass(frozen=True)
class OmegaThreshold:
    """Gradient-norm radius 5 sqrt(L) d max(1, log(kappa / eps)) of the high-probability region."""

    value: float


def omega_threshold(target: TargetDensity, eps: float) -> OmegaThreshold:
    if not 0.0 < eps <= 1.0:
        raise SpecError(f"accuracy must lie in (0, 1], got {eps}")
    log_term = max(1.0, math.log(target.kappa / eps))
    return OmegaThreshold(5.0 * math.sqrt(target.smoothness) * target.dim * log_term)


def omega_indicator(target: TargetDensity, thr: OmegaThreshold, x: FloatArray) -> BoolArray:
    """True where |grad f(x)| <= thr.value. Accepts a point or a batch."""
    return np.linalg.norm(target.grad(as_vector(x, target.dim)), axis=-1) <= thr.value


def tail_threshold(target: TargetDensity, c: float) -> float:
    """sqrt(L d) + c sqrt(L) log d."""
    L, d = target.smoothness, target.dim
    return math.sqrt(L * d) + c * math.sqrt(L) * math.log(d)


def tail_key(c: float) -> str:
    return f"{c:g}"


class EmpiricalSummary(BaseModel):
    """Gradient statistics of a sample set.

    `tail_fractions` maps each c (formatted with `tail_key`) to the fraction
    of samples whose gradient norm exceeds `tail_threshold(target, c)`.
    The chain fields are None when the samples did not come from chains,
    `ks_per_coordinate` is empty for non-Gaussian targets and
    `omega_fraction` is None when no accuracy was given.
    """

    model_config = ConfigDict(frozen=True)

    n_samples: int = Field(ge=1)
    mean_grad_norm: float
    grad_norm_se: float
    mean_sq_grad_norm: float
    sq_grad_norm_se: float
    mean_laplacian: float
    exp_moment: float
    exp_moment_se: float
    tail_fractions: dict[str, float]
    accept_rate: float | None = Field(default=None, ge=0.0, le=1.0)
    mean_delta_h: float | None = None
    ks_per_coordinate: list[float] = Field(default_factory=list)
    omega_fraction: float | None = Field(default=None, ge=0.0, le=1.0)


def grad_concentration_report(
    target: TargetDensity,
    samples: FloatArray,
    c_values: list[float],
    *,
    eps: float | None = None,
    accept_flags: BoolArray | None = None,
    delta_h: FloatArray | None = None,
    ks_per_coordinate: list[float] | None = None,
) -> EmpiricalSummary:
    """Summarize |grad f| over `samples` of shape (n, d).

    Besides the mean and the tail fractions, reports E|grad f|^2 next to
    E[laplacian f] (equal under the target) and the exponential moment
    E[exp((G - E G) / sqrt L)] for G = |grad f|.

    Raises:
        SpecError: If `samples` is empty.
    """
    xs = as_vector(samples, target.dim, name="samples")
    if xs.ndim != 2 or xs.shape[0] == 0:
        raise SpecError("gradient concentration needs a non-empty (n, d) sample array")

    norms = np.linalg.norm(target.grad(xs), axis=1)
    mean = mean_estimate(norms)
    squares = mean_estimate(norms * norms)
    exp_moment = mean_estimate(np.exp((norms - mean.value) / math.sqrt(target.smoothness)))
    tails = {tail_key(c): float(np.mean(norms > tail_threshold(target, c))) for c in c_values}

    omega_fraction = None
    if eps is not None:
        omega_fraction = float(np.mean(omega_indicator(target, omega_threshold(target, eps), xs)))

    return EmpiricalSummary(
        n_samples=xs.shape[0],
        mean_grad_norm=mean.value,
        grad_norm_se=mean.standard_error,
        mean_sq_grad_norm=squares.value,
        sq_grad_norm_se=squares.standard_error,
        mean_laplacian=float(np.mean(target.laplacian(xs))),
        exp_moment=exp_moment.value,
        exp_moment_se=exp_moment.standard_error,
        tail_fractions=tails,
        accept_rate=None if accept_flags is None else float(np.mean(accept_flags)),
        mean_delta_h=None if delta_h is None else float(np.nanmean(delta_h)),
        ks_per_coordinate=ks_per_coordinate or [],
        omega_fraction=omega_fraction,
    )


def concentration_claims(target: TargetDensity, summary: EmpiricalSummary, eps: float | None = None) -> Block[ClaimCheck]:
    """Claims on the gradient norm derived from a summary.

    Tail claims use 3 d^-c for every target and, for Gaussian targets,
    the sharper d^-(c^2). The omega-mass claim needs `eps` and a summary
    with `omega_fraction`.
    """
    L, d, n = target.smoothness, target.dim, summary.n_samples
    claims = [
        check_upper(
            "grad-mean",
            "E|grad f| <= sqrt(L d)",
            MonteCarloEstimate(summary.mean_grad_norm, summary.grad_norm_se, n),
            math.sqrt(L * d),
        ),
        check_upper(
            "grad-second-moment",
            "E|grad f|^2 = E[laplacian f] <= L d",
            MonteCarloEstimate(summary.mean_sq_grad_norm, summary.sq_grad_norm_se, n),
            L * d,
        ),
        check_upper(
            "grad-exp-moment",
            "E exp((|grad f| - E|grad f|) / sqrt L) <= 3",
            MonteCarloEstimate(summary.exp_moment, summary.exp_moment_se, n),
            3.0,
        ),
    ]
    for key, fraction in summary.tail_fractions.items():
        c = float(key)
        estimate = MonteCarloEstimate(fraction, math.sqrt(fraction * (1.0 - fraction) / n), n)
        claims.append(
            check_upper(f"grad-tail-c{key}", "P(|grad f| >= sqrt(L d) + c sqrt(L) log d) <= 3 d^-c", estimate, 3.0 * d**-c)
        )
        if target.is_gaussian():
            claims.append(
                check_upper(
                    f"grad-gaussian-tail-c{key}",
                    "Gaussian target: P(|grad f| >= sqrt(L d) + c sqrt(L) log d) <= d^-(c^2)",
                    estimate,
                    float(d) ** -(c * c),
                )
            )
    if eps is not None and summary.omega_fraction is not None:
        outside = 1.0 - summary.omega_fraction
        estimate = MonteCarloEstimate(outside, math.sqrt(outside * summary.omega_fraction / n), n)
        bound = math.exp(-4.0 * d * math.log(target.kappa / eps))
        claims.append(check_upper("omega-mass", "P(x outside omega) <= (kappa / eps)^(-4d)", estimate, bound))
    return Block(claims)


def proposal_overlap_tv(target: TargetDensity, eta: float, x: FloatArray, y: FloatArray) -> FloatArray:
    """Total variation between the Langevin proposals from x and from y.

    Both are N(z - (eta^2 / 2) grad f(z), eta^2 I); for equal covariances
    the distance is erf(r / (2 sqrt(2) eta)) = 2 Phi(r / (2 eta)) - 1 where
    r is the distance between the means. Batched over the leading axis.
    """
    if not eta > 0.0:
        raise SpecError(f"step size must be positive, got {eta}")
    half = 0.5 * eta * eta
    x = as_vector(x, target.dim)
    y = as_vector(y, target.dim)
    r = np.linalg.norm((x - half * target.grad(x)) - (y - half * target.grad(y)), axis=-1)
    return special.erf(r / (2.0 * math.sqrt(2.0) * eta))


def rejection_probability(
    target: TargetDensity, eta: float, x: FloatArray, n_mc: int, rng: np.random.Generator
) -> MonteCarloEstimate:
    """Monte Carlo estimate of 1 - E_v[min(1, exp(-dH))] at the point x."""
    if n_mc < 1:
        raise SpecError(f"n_mc must be at least 1, got {n_mc}")
    x = as_vector(x, target.dim, name="x")
    v = rng.standard_normal((n_mc, target.dim))
    _, delta_h = proposal_step(target, eta, np.broadcast_to(x, v.shape), v)
    return mean_estimate(-np.expm1(log_accept_probability(delta_h)))


def overlap_claim(target: TargetDensity, eta: float, n_pairs: int, rng: np.random.Generator) -> ClaimCheck:
    """Largest proposal overlap over random pairs with |x - y| <= eta."""
    x = target.minimizer + rng.standard_normal((n_pairs, target.dim)) / math.sqrt(target.strong_convexity)
    direction = rng.standard_normal((n_pairs, target.dim))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radius = eta * rng.random(n_pairs) ** (1.0 / target.dim)
    y = x + radius[:, None] * direction
    worst = float(np.max(proposal_overlap_tv(target, eta, x, y)))
    return check_upper("proposal-overlap", "sup over |x - y| <= eta of TV(P_x, P_y) <= 5/8", worst, OVERLAP_BOUND)


def rejection_claim(
    target: TargetDensity,
    eta: float,
    eps: float,
    points: FloatArray,
    n_points: int,
    n_mc: int,
    rng: np.random.Generator,
) -> ClaimCheck:
    """Rejection probability at the first `n_points` of `points` that lie in omega.

    The reported statistic is the estimate at the point with the smallest
    margin to 1/8 + 3 SE.
    """
    thr = omega_threshold(target, eps)
    inside = as_vector(points, target.dim, name="points")
    inside = inside[omega_indicator(target, thr, inside)][:n_points]
    if inside.shape[0] == 0:
        raise SpecError("no points inside omega to test")
    estimates = [rejection_probability(target, eta, x, n_mc, rng) for x in inside]
    worst = max(estimates, key=lambda e: e.value - SE_SLACK * e.standard_error)
    logger.debug("rejection on omega: worst %.4g +/- %.2g over %d points", worst.value, worst.standard_error, len(estimates))
    return check_upper("rejection-on-omega", "sup over x in omega of P(reject at x) <= 1/8", worst, REJECTION_BOUND)


def chi_sq_claim(d: int, t: float, n: int, rng: np.random.Generator) -> ClaimCheck:
    """Fraction of chi^2_d draws beyond d + 2 sqrt(d t) + 2t against exp(-t)."""
    tail = chi_sq_tail_bound(d, t)
    draws = rng.chisquare(d, n)
    return check_upper(
        "chi-sq-tail", "P(chi^2_d >= d + 2 sqrt(d t) + 2t) <= exp(-t)", fraction_estimate(draws >= tail.threshold), tail.bound
    )


def product_claims(cs: list[float], k_terms: int) -> Block[ClaimCheck]:
    def claim(C: float) -> ClaimCheck:
        partial, bound = partial_product(C, k_terms)
        return check_upper(
            f"product-inequality-C{C:g}", "prod_k (1 - C / 4^k)^(-2^k) <= (1 + sqrt C) / (1 - sqrt C)", partial, bound
        )

    return Block(cs).map(claim)


__all__ = [
    "OVERLAP_BOUND",
    "REJECTION_BOUND",
    "SE_SLACK",
    "ClaimCheck",
    "EmpiricalSummary",
    "OmegaThreshold",
    "check_lower",
    "check_upper",
    "chi_sq_claim",
    "concentration_claims",
    "grad_concentration_report",
    "omega_indicator",
    "omega_threshold",
    "overlap_claim",
    "product_claims",
    "proposal_overlap_tv",
    "rejection_claim",
    "rejection_probability",
    "tail_key",
    "tail_threshold",
]
