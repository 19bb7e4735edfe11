"""Numerical self-checks of a target's declared constants."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from expression import Nothing, Option, Some
from expression.collections import Block

from .error import SpecError
from .target import TargetDensity
from .typing import FloatArray


GRADIENT_TOLERANCE = 1e-5
INEQUALITY_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class CheckOutcome:
    """Largest normalized violation of one check over all sampled pairs."""

    name: str
    max_violation: float
    tolerance: float
    offending: Option[tuple[FloatArray, FloatArray]] = Nothing

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tolerance


@dataclass(frozen=True, eq=False)
class ValidationReport:
    target: str
    n_pairs: int
    checks: Block[CheckOutcome]

    @property
    def passed(self) -> bool:
        return self.checks.forall(lambda check: check.passed)

    def failures(self) -> Block[CheckOutcome]:
        return self.checks.filter(lambda check: not check.passed)


def _ball(rng: np.random.Generator, center: FloatArray, radius: float, n: int) -> FloatArray:
    direction = rng.standard_normal((n, center.shape[0]))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    scale = radius * rng.random(n) ** (1.0 / center.shape[0])
    return center + scale[:, None] * direction


def _outcome(name: str, violations: FloatArray, tolerance: float, xs: FloatArray, ys: FloatArray) -> CheckOutcome:
    worst = int(np.argmax(violations))
    value = max(0.0, float(violations[worst]))
    offending: Option[tuple[FloatArray, FloatArray]] = Some((xs[worst], ys[worst])) if value > tolerance else Nothing
    return CheckOutcome(name, value, tolerance, offending)


def _fd_gradient(target: TargetDensity, xs: FloatArray, h: float) -> FloatArray:
    n, d = xs.shape
    offsets = h * np.eye(d)
    plus = target.potential(xs[:, None, :] + offsets[None, :, :])
    minus = target.potential(xs[:, None, :] - offsets[None, :, :])
    return (plus - minus).reshape(n, d) / (2.0 * h)


def validate_target(target: TargetDensity, n_pairs: int, seed: int) -> ValidationReport:
    """Check the declared constants of `target` on random pairs.

    Pairs are drawn uniformly from the ball of radius 10/sqrt(mu) around
    x*, which holds the bulk of the stationary mass. Three checks run on
    every pair: central finite differences against `grad` (relative to
    max(|grad f|, sqrt(L))), the L-Lipschitz gradient inequality and the
    mu-strong convexity inequality.
    """
    if n_pairs < 1:
        raise SpecError(f"n_pairs must be at least 1, got {n_pairs}")

    rng = np.random.default_rng(seed)
    radius = 10.0 / math.sqrt(target.strong_convexity)
    xs = _ball(rng, target.minimizer, radius, n_pairs)
    ys = _ball(rng, target.minimizer, radius, n_pairs)
    L, mu = target.smoothness, target.strong_convexity

    gx, gy = target.grad(xs), target.grad(ys)
    fx, fy = target.potential(xs), target.potential(ys)

    fd = _fd_gradient(target, xs, 1e-4 * radius / 10.0)
    scale = np.maximum(np.linalg.norm(gx, axis=1), math.sqrt(L))
    gradient = np.linalg.norm(fd - gx, axis=1) / scale

    dist = np.linalg.norm(ys - xs, axis=1)
    smooth_room = L * dist
    smoothness = (np.linalg.norm(gy - gx, axis=1) - smooth_room) / np.maximum(smooth_room, np.finfo(float).tiny)

    gap = fy - fx - np.sum(gx * (ys - xs), axis=1) - 0.5 * mu * dist**2
    magnitude = np.abs(fx) + np.abs(fy) + L * dist**2
    convexity = -gap / np.maximum(magnitude, np.finfo(float).tiny)

    checks = Block(
        [
            _outcome("gradient", gradient, GRADIENT_TOLERANCE, xs, ys),
            _outcome("smoothness", smoothness, INEQUALITY_TOLERANCE, xs, ys),
            _outcome("strong_convexity", convexity, INEQUALITY_TOLERANCE, xs, ys),
        ]
    )
    return ValidationReport(target.name, n_pairs, checks)


__all__ = ["CheckOutcome", "ValidationReport", "validate_target"]
