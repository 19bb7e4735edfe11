"""Acceptance collapse of one-step HMC with step size eta = c / sqrt(kappa).

The experiment runs on the hard instance f(x) = 1/2 x^T D x with
D = diag(kappa, ..., kappa, 1). Starting points are exact stationary
draws, so every difference between rows comes from the step size alone.
Once eta^2 kappa >= 20 the energy change is bounded below by

    (eta^6 kappa^4 / 128) |x_hat|^2 - (eta^4 kappa^2 / 4) |v|^2
        + (eta^2 / 8) (eta^4 / 8 - eta^2 - 1) x_d^2,

where x_hat holds the first d - 1 coordinates, and the accept probability
decays like exp(-c^6 d).
"""
from __future__ import annotations

import logging
import math

import numpy as np
from expression import Nothing, Option, Some
from expression.collections import Block
from pydantic import BaseModel, ConfigDict, Field, field_validator

from lshmc.core.error import unwrap
from lshmc.core.hmc import energy, log_accept_probability, metropolis_accept, proposal_step, quadratic_delta_h
from lshmc.core.target import TargetDensity, TargetKind, TargetSpec, exact_draws, make_target
from lshmc.core.typing import FloatArray
from lshmc.diagnostics.claims import ClaimCheck, check_lower, check_upper
from lshmc.diagnostics.stats import MonteCarloEstimate
from lshmc.sampler.streams import chain_generator


logger = logging.getLogger(__name__)

IDENTITY_TOLERANCE = 1e-8
MARGIN_TOLERANCE = 1e-9
HAMBOUND_MIN_ETA2_KAPPA = 20.0
COLLAPSE_MIN_EXPONENT = 4.0


class LowerBoundRunSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    kappa: float = Field(default=1e4, ge=1.0)
    dim: int = Field(default=32, ge=2)
    c_values: list[float] = Field(default_factory=lambda: [5.0, 10.0, 20.0, 40.0], min_length=1)
    n_draws: int = Field(default=10_000, ge=2)
    seed: int = Field(default=0, ge=0, lt=2**64)

    @field_validator("c_values")
    @classmethod
    def _ascending(cls, values: list[float]) -> list[float]:
        if any(c <= 0.0 for c in values):
            raise ValueError("c values must be positive")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("c values must be strictly ascending")
        return values


class LowerBoundRow(BaseModel):
    """One row per c.

    `hambound_min_margin` is the smallest normalized margin of the energy
    lower bound and is only filled in once eta^2 kappa >= 20.
    """

    model_config = ConfigDict(frozen=True)

    c: float
    eta: float
    mean_log_accept: float
    accept_rate: float
    n_draws: int
    identity_max_rel_err: float
    hambound_min_margin: float | None = None
    chi_sq_event_fraction: float


def energy_lower_bound(eta: float, kappa: float, x: FloatArray, v: FloatArray) -> FloatArray:
    """Right-hand side of the energy lower bound on the hard instance, batched."""
    x_hat, x_d = x[..., :-1], x[..., -1]
    e2 = eta * eta
    return (
        (e2**3 * kappa**4 / 128.0) * np.sum(x_hat * x_hat, axis=-1)
        - (e2 * e2 * kappa * kappa / 4.0) * np.sum(v * v, axis=-1)
        + (e2 / 8.0) * (e2 * e2 / 8.0 - e2 - 1.0) * x_d * x_d
    )


def chi_sq_events(kappa: float, x: FloatArray, v: FloatArray) -> FloatArray:
    """Draws meeting the three high-probability events behind the bound.

    kappa |x_hat|^2 >= (d - 1) - 10 sqrt(d log d), |v|^2 <= d + 10 sqrt(d log d) + 50 log d
    and x_d^2 <= 10 log d.
    """
    d = x.shape[-1]
    log_d = math.log(d)
    spread = 10.0 * math.sqrt(d * log_d)
    return (
        (kappa * np.sum(x[..., :-1] ** 2, axis=-1) >= (d - 1) - spread)
        & (np.sum(v * v, axis=-1) <= d + spread + 50.0 * log_d)
        & (x[..., -1] ** 2 <= 10.0 * log_d)
    )


def _row(target: TargetDensity, spec: LowerBoundRunSpec, c: float, rng: np.random.Generator) -> LowerBoundRow:
    eta = c / math.sqrt(spec.kappa)
    x = unwrap(exact_draws(target, rng, spec.n_draws))
    v = rng.standard_normal(x.shape)
    log_u = np.log1p(-rng.random(spec.n_draws))

    proposal, delta_h = proposal_step(target, eta, x, v)
    precision = target.precision.default_value(np.ones(target.dim))
    identity = quadratic_delta_h(precision, eta, x, proposal.x, target.minimizer)
    scale = np.maximum(np.abs(delta_h), 1.0 + energy(target, x, v))
    rel_err = float(np.max(np.abs(delta_h - identity) / scale))

    margin: float | None = None
    if eta * eta * spec.kappa >= HAMBOUND_MIN_ETA2_KAPPA:
        bound = energy_lower_bound(eta, spec.kappa, x, v)
        margin = float(np.min((delta_h - bound) / (np.abs(delta_h) + np.abs(bound) + 1.0)))

    row = LowerBoundRow(
        c=c,
        eta=eta,
        mean_log_accept=float(np.mean(log_accept_probability(delta_h))),
        accept_rate=float(np.mean(metropolis_accept(delta_h, log_u))),
        n_draws=spec.n_draws,
        identity_max_rel_err=rel_err,
        hambound_min_margin=margin,
        chi_sq_event_fraction=float(np.mean(chi_sq_events(spec.kappa, x, v))),
    )
    logger.info("lower bound c=%g: accept rate %.4g, mean log accept %.4g", c, row.accept_rate, row.mean_log_accept)
    return row


def lower_bound_experiment(spec: LowerBoundRunSpec) -> Block[LowerBoundRow]:
    """One row per c in `spec.c_values`.

    Row i draws, in order, x from the target, v and the uniforms from
    stream i of `spec.seed`.
    """
    target = unwrap(make_target(TargetSpec(TargetKind.Hard(spec.kappa, spec.dim))))
    return Block(spec.c_values).mapi(lambda i, c: _row(target, spec, c, chain_generator(spec.seed, i)))


def fit_collapse_exponent(rows: Block[LowerBoundRow]) -> Option[float]:
    """Slope of log(-mean_log_accept) against log c.

    Rows whose mean log accept is zero carry no information and are
    skipped. Nothing when fewer than two rows remain.
    """
    usable = rows.filter(lambda row: row.mean_log_accept < 0.0)
    if len(usable) < 2:
        return Nothing
    log_c = np.log([row.c for row in usable])
    log_decay = np.log([-row.mean_log_accept for row in usable])
    slope, _ = np.polyfit(log_c, log_decay, 1)
    return Some(float(slope))


def _se(row: LowerBoundRow) -> float:
    return math.sqrt(row.accept_rate * (1.0 - row.accept_rate) / row.n_draws)


def lower_bound_claims(rows: Block[LowerBoundRow]) -> Block[ClaimCheck]:
    claims = [
        check_upper(
            "energy-identity",
            "generic and closed-form quadratic energy changes agree to 1e-8 relative",
            max(row.identity_max_rel_err for row in rows),
            IDENTITY_TOLERANCE,
        )
    ]
    margins = [row.hambound_min_margin for row in rows if row.hambound_min_margin is not None]
    if margins:
        claims.append(
            check_lower(
                "energy-lower-bound",
                "dH >= (eta^6 kappa^4 / 128)|x_hat|^2 - (eta^4 kappa^2 / 4)|v|^2 + (eta^2 / 8)(eta^4 / 8 - eta^2 - 1) x_d^2",
                min(margins),
                -MARGIN_TOLERANCE,
            )
        )
    if len(rows) > 1:
        pairs = list(zip(rows, rows.tail()))
        prev, nxt = max(pairs, key=lambda p: p[1].accept_rate - p[0].accept_rate)
        rise = MonteCarloEstimate(nxt.accept_rate - prev.accept_rate, math.hypot(_se(prev), _se(nxt)), nxt.n_draws)
        claims.append(check_upper("accept-monotone", "accept rate is non-increasing in c", rise, 0.0))
    match fit_collapse_exponent(rows):
        case Option(tag="some", some=slope):
            claims.append(
                check_lower(
                    "collapse-exponent",
                    "log(-E log accept) grows at least like 4 log c",
                    slope,
                    COLLAPSE_MIN_EXPONENT,
                )
            )
        case _:
            logger.warning("too few rows with a positive rejection rate to fit the collapse exponent")
    return Block(claims)


__all__ = [
    "LowerBoundRow",
    "LowerBoundRunSpec",
    "chi_sq_events",
    "energy_lower_bound",
    "fit_collapse_exponent",
    "lower_bound_claims",
    "lower_bound_experiment",
]
