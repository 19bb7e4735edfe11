"""Statistical utilities: Monte Carlo estimates, Kolmogorov distances and tail bounds."""
from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from lshmc.core.error import ClaimCheckFailed, SpecError
from lshmc.core.typing import FloatArray


@dataclass(frozen=True)
class MonteCarloEstimate:
    value: float
    standard_error: float
    n: int


@dataclass(frozen=True)
class ChiSquaredTail:
    threshold: float
    bound: float


def mean_estimate(values: FloatArray) -> MonteCarloEstimate:
    """Sample mean with its standard error."""
    values = np.asarray(values, dtype=np.float64)
    n = values.size
    if n == 0:
        raise SpecError("cannot estimate a mean from zero samples")
    se = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else float("inf")
    return MonteCarloEstimate(float(np.mean(values)), se, n)


def fraction_estimate(flags: FloatArray) -> MonteCarloEstimate:
    """Binomial proportion with standard error sqrt(p (1 - p) / n)."""
    flags = np.asarray(flags, dtype=np.bool_)
    n = flags.size
    if n == 0:
        raise SpecError("cannot estimate a fraction from zero samples")
    p = float(np.count_nonzero(flags)) / n
    return MonteCarloEstimate(p, math.sqrt(p * (1.0 - p) / n), n)


def normal_cdf(z: FloatArray | float) -> FloatArray:
    """Standard normal CDF through scipy's ndtr (absolute error below 1e-15)."""
    return special.ndtr(z)


def ks_distance(samples_1d: FloatArray, cdf: Callable[[FloatArray], FloatArray], *, continuous: bool = True) -> float:
    """Kolmogorov distance between the empirical CDF of the samples and `cdf`.

    The supremum is taken over the sample points. With `continuous` set,
    both one-sided gaps at each point are used (the usual two-sided
    statistic); otherwise only the right-continuous empirical CDF is
    compared, which is exact when `cdf` itself is a step function.
    """
    xs = np.sort(np.asarray(samples_1d, dtype=np.float64).ravel())
    n = xs.size
    if n == 0:
        raise SpecError("Kolmogorov distance needs at least one sample")
    values = np.asarray(cdf(xs), dtype=np.float64)
    upper = np.searchsorted(xs, xs, side="right") / n
    distance = float(np.max(np.abs(upper - values)))
    if continuous:
        lower = np.searchsorted(xs, xs, side="left") / n
        distance = max(distance, float(np.max(np.abs(values - lower))))
    return distance


def kolmogorov_critical(n: int, alpha: float = 0.01) -> float:
    """Critical Kolmogorov distance at level `alpha` for `n` samples."""
    return float(stats.kstwo.ppf(1.0 - alpha, n))


def chi_sq_tail_bound(d: int, t: float) -> ChiSquaredTail:
    """Upper chi-squared tail: P(X >= d + 2 sqrt(d t) + 2t) <= exp(-t) for X ~ chi^2_d."""
    if not t > 0.0:
        raise SpecError(f"tail parameter must be positive, got {t}")
    return ChiSquaredTail(d + 2.0 * math.sqrt(d * t) + 2.0 * t, math.exp(-t))


def chi_sq_lower_tail_bound(d: int, t: float) -> ChiSquaredTail:
    """Lower chi-squared tail: P(X <= d - 2 sqrt(d t)) <= exp(-t)."""
    if not t > 0.0:
        raise SpecError(f"tail parameter must be positive, got {t}")
    return ChiSquaredTail(d - 2.0 * math.sqrt(d * t), math.exp(-t))


def partial_product(C: float, k_terms: int) -> tuple[float, float]:
    """Truncated product prod_{k < k_terms} (1 - C / 4^k)^(-2^k) and its bound (1 + sqrt C) / (1 - sqrt C).

    The product is accumulated in log space.
    """
    if not 0.0 <= C < 1.0:
        raise SpecError(f"product inequality needs 0 <= C < 1, got {C}")
    if k_terms < 0:
        raise SpecError(f"k_terms must be non-negative, got {k_terms}")
    log_partial = 0.0
    for k in range(k_terms):
        log_partial -= 2.0**k * math.log1p(-C / 4.0**k)
    root = math.sqrt(C)
    return math.exp(log_partial), (1.0 + root) / (1.0 - root)


def product_bound_check(C: float, k_terms: int) -> tuple[float, float]:
    """`partial_product`, raising when the partial product exceeds its bound.

    Raises:
        SpecError: If C is outside [0, 1).
        ClaimCheckFailed: If the partial product exceeds the bound.
    """
    partial, bound = partial_product(C, k_terms)
    if partial > bound * (1.0 + 1e-12):
        raise ClaimCheckFailed(f"partial product {partial} exceeds {bound} at C = {C}")
    return partial, bound


__all__ = [
    "ChiSquaredTail",
    "MonteCarloEstimate",
    "chi_sq_lower_tail_bound",
    "chi_sq_tail_bound",
    "fraction_estimate",
    "kolmogorov_critical",
    "ks_distance",
    "mean_estimate",
    "normal_cdf",
    "partial_product",
    "product_bound_check",
]
