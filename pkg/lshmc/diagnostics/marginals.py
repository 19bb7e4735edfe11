"""Analytic one-dimensional marginals of Gaussian targets and projected Kolmogorov distances."""
from __future__ import annotations

import math
from collections.abc import Callable

import numpy as np
from expression import Error, Ok, Option, Result

from lshmc.core.error import SpecError
from lshmc.core.target import TargetDensity
from lshmc.core.typing import FloatArray, as_vector

from .stats import ks_distance, normal_cdf


Cdf = Callable[[FloatArray], FloatArray]


def _precision(target: TargetDensity) -> Result[FloatArray, SpecError]:
    match target.precision:
        case Option(tag="some", some=precision):
            return Ok(precision)
        case _:
            return Error(SpecError(f"{target.name} has no closed-form marginals"))


def _gaussian_cdf(mean: float, sd: float) -> Cdf:
    def cdf(t: FloatArray) -> FloatArray:
        return normal_cdf((np.asarray(t) - mean) / sd)

    return cdf


def marginal_cdf(target: TargetDensity, direction: FloatArray) -> Result[Cdf, SpecError]:
    """CDF of u^T x under the target for a direction u.

    With precision D the projection is N(u^T x*, sum u_i^2 / lambda_i).
    """
    u = as_vector(direction, target.dim, name="direction")

    def build(precision: FloatArray) -> Cdf:
        mean = float(u @ target.minimizer)
        sd = math.sqrt(float(np.sum(u * u / precision)))
        return _gaussian_cdf(mean, sd)

    return _precision(target).map(build)


def coordinate_cdfs(target: TargetDensity) -> Result[list[Cdf], SpecError]:
    """One marginal CDF per coordinate."""

    def build(precision: FloatArray) -> list[Cdf]:
        return [_gaussian_cdf(float(m), 1.0 / math.sqrt(float(p))) for m, p in zip(target.minimizer, precision)]

    return _precision(target).map(build)


def coordinate_ks(samples: FloatArray, target: TargetDensity) -> Result[list[float], SpecError]:
    """Kolmogorov distance of every coordinate of `samples` (shape (n, d)) to its marginal."""
    xs = as_vector(samples, target.dim, name="samples")
    if xs.ndim != 2 or xs.shape[0] == 0:
        return Error(SpecError("samples must be a non-empty (n, d) array"))
    return coordinate_cdfs(target).map(lambda cdfs: [ks_distance(xs[:, i], cdf) for i, cdf in enumerate(cdfs)])


def random_directions(rng: np.random.Generator, n: int, dim: int) -> FloatArray:
    """`n` directions uniform on the unit sphere, shape (n, dim)."""
    z = rng.standard_normal((n, dim))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def projected_ks(
    samples: FloatArray, target: TargetDensity, n_projections: int, rng: np.random.Generator
) -> Result[list[float], SpecError]:
    """Kolmogorov distances on every coordinate followed by `n_projections` random unit directions.

    Each distance lower-bounds the total variation between the sample law
    and the target restricted to that projection.
    """
    if n_projections < 0:
        return Error(SpecError(f"n_projections must be non-negative, got {n_projections}"))
    xs = as_vector(samples, target.dim, name="samples")
    directions = random_directions(rng, n_projections, target.dim)

    def projections(coordinates: list[float]) -> Result[list[float], SpecError]:
        distances = list(coordinates)
        for u in directions:
            match marginal_cdf(target, u):
                case Result(tag="ok", ok=cdf):
                    distances.append(ks_distance(xs @ u, cdf))
                case Result(error=error):
                    return Error(error)
        return Ok(distances)

    return coordinate_ks(xs, target).bind(projections)


__all__ = [
    "Cdf",
    "coordinate_cdfs",
    "coordinate_ks",
    "marginal_cdf",
    "projected_ks",
    "random_directions",
]
