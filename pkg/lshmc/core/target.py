"""Target densities.

A target is a density proportional to exp(-f) where f is L-smooth and
mu-strongly convex with known constants. Four kinds are provided:

- `gaussian_iso`: f(x) = 1/2 |x - b|^2.
- `gaussian_diag`: f(x) = 1/2 (x - b)^T D (x - b), D = diag(eigenvalues).
- `hard_instance`: the diagonal quadratic with eigenvalues kappa for the
  first d - 1 coordinates and 1 for the last one.
- `quartic_mix`: a diagonal quadratic plus a weighted sum of log-cosh
  terms, a non-quadratic target with closed-form constants.

All potentials are shifted so that f(x*) = 0. Every map accepts a single
point of shape (d,) or a batch of shape (n, d).
"""
from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from expression import Error, Nothing, Ok, Option, Result, Some, case, tag, tagged_union

from .error import ConvergenceError, LshmcError, SpecError
from .typing import FloatArray, as_vector


logger = logging.getLogger(__name__)

_LOG2 = math.log(2.0)


@dataclass(frozen=True)
class HardInstance:
    kappa: float
    dim: int


@dataclass(frozen=True)
class QuarticMix:
    eigenvalues: tuple[float, ...]
    weight: float = 1.0


@tagged_union(frozen=True)
class TargetKind:
    """The family a target belongs to, with its kind-specific parameters."""

    tag: Literal["gaussian_iso", "gaussian_diag", "hard_instance", "quartic_mix"] = tag()

    gaussian_iso: int = case()
    gaussian_diag: tuple[float, ...] = case()
    hard_instance: HardInstance = case()
    quartic_mix: QuarticMix = case()

    @staticmethod
    def GaussianIso(dim: int) -> TargetKind:
        return TargetKind(gaussian_iso=dim)

    @staticmethod
    def GaussianDiag(eigenvalues: tuple[float, ...]) -> TargetKind:
        return TargetKind(gaussian_diag=tuple(float(e) for e in eigenvalues))

    @staticmethod
    def Hard(kappa: float, dim: int) -> TargetKind:
        return TargetKind(hard_instance=HardInstance(float(kappa), dim))

    @staticmethod
    def Quartic(eigenvalues: tuple[float, ...], weight: float = 1.0) -> TargetKind:
        return TargetKind(quartic_mix=QuarticMix(tuple(float(e) for e in eigenvalues), float(weight)))


@dataclass(frozen=True)
class TargetSpec:
    """A target kind plus an optional translation of the minimizer."""

    kind: TargetKind
    shift: Option[tuple[float, ...]] = Nothing

    def eigenvalues(self) -> tuple[float, ...]:
        """Diagonal of the quadratic part."""
        match self.kind:
            case TargetKind(tag="gaussian_iso", gaussian_iso=dim):
                return (1.0,) * dim
            case TargetKind(tag="gaussian_diag", gaussian_diag=eigs):
                return eigs
            case TargetKind(tag="hard_instance", hard_instance=HardInstance(kappa=kappa, dim=dim)):
                return (kappa,) * (dim - 1) + (1.0,) if dim >= 1 else ()
            case TargetKind(quartic_mix=QuarticMix(eigenvalues=eigs)):
                return eigs

    @property
    def dim(self) -> int:
        return len(self.eigenvalues())


@dataclass(frozen=True, eq=False)
class TargetDensity:
    """A density exp(-f) with its smoothness and convexity constants.

    Attributes:
        name: Human readable description of the target.
        dim: Dimension d.
        smoothness: Gradient Lipschitz constant L.
        strong_convexity: Strong convexity constant mu.
        minimizer: The point x* with f(x*) = 0.
        potential: The map x -> f(x).
        grad: The map x -> grad f(x).
        laplacian: The map x -> trace of the Hessian of f at x.
        precision: Diagonal of the Hessian when f is a diagonal quadratic,
            in which case the target is a Gaussian with this precision.
    """

    name: str
    dim: int
    smoothness: float
    strong_convexity: float
    minimizer: FloatArray
    potential: Callable[[FloatArray], FloatArray]
    grad: Callable[[FloatArray], FloatArray]
    laplacian: Callable[[FloatArray], FloatArray]
    precision: Option[FloatArray] = field(default=Nothing)

    @property
    def kappa(self) -> float:
        return self.smoothness / self.strong_convexity

    def is_gaussian(self) -> bool:
        return self.precision.is_some()


def _quadratic(eigs: FloatArray, shift: FloatArray, weight: float) -> tuple[
    Callable[[FloatArray], FloatArray],
    Callable[[FloatArray], FloatArray],
    Callable[[FloatArray], FloatArray],
]:
    trace = float(np.sum(eigs))

    def potential(x: FloatArray) -> FloatArray:
        z = np.asarray(x, dtype=np.float64) - shift
        value = 0.5 * np.sum(eigs * z * z, axis=-1)
        if weight:
            # log cosh(z) = logaddexp(z, -z) - log 2, exact zero at z = 0
            value = value + weight * np.sum(np.logaddexp(z, -z) - _LOG2, axis=-1)
        return value

    def grad(x: FloatArray) -> FloatArray:
        z = np.asarray(x, dtype=np.float64) - shift
        g = eigs * z
        if weight:
            g = g + weight * np.tanh(z)
        return g

    def laplacian(x: FloatArray) -> FloatArray:
        z = np.asarray(x, dtype=np.float64) - shift
        value = np.full(z.shape[:-1], trace)
        if weight:
            t = np.tanh(z)
            value = value + weight * np.sum(1.0 - t * t, axis=-1)
        return value

    return potential, grad, laplacian


def make_target(spec: TargetSpec) -> Result[TargetDensity, SpecError]:
    """Build the target density described by `spec`.

    For quadratic kinds L = max eigenvalue, mu = min eigenvalue and the
    minimizer is the shift. For `quartic_mix` the log-cosh terms have
    second derivative weight * sech^2 in [0, weight], so the Hessian is
    diagonal with entries in [lambda_i, lambda_i + weight] and the
    constants L = max lambda + weight, mu = min lambda are exact.
    """
    match spec.kind:
        case TargetKind(tag="hard_instance", hard_instance=HardInstance(kappa=kappa)) if not kappa >= 1.0:
            return Error(SpecError(f"hard instance needs kappa >= 1, got {kappa}"))
        case TargetKind(tag="quartic_mix", quartic_mix=QuarticMix(weight=weight)) if not weight >= 0.0:
            return Error(SpecError(f"quartic weight must be non-negative, got {weight}"))
        case _:
            pass

    eigenvalues = spec.eigenvalues()
    dim = len(eigenvalues)
    if dim == 0:
        return Error(SpecError("target dimension must be at least 1"))
    eigs = np.asarray(eigenvalues, dtype=np.float64)
    if not np.all(np.isfinite(eigs)) or np.any(eigs <= 0.0):
        return Error(SpecError(f"eigenvalues must be finite and strictly positive, got {eigenvalues}"))

    match spec.shift:
        case Option(tag="some", some=values) if len(values) != dim:
            return Error(SpecError(f"shift has length {len(values)}, expected {dim}"))
        case Option(tag="some", some=values):
            shift = np.asarray(values, dtype=np.float64)
        case _:
            shift = np.zeros(dim)
    if not np.all(np.isfinite(shift)):
        return Error(SpecError("shift must be finite"))

    weight = spec.kind.quartic_mix.weight if spec.kind.tag == "quartic_mix" else 0.0
    potential, grad, laplacian = _quadratic(eigs, shift, weight)
    eigs.flags.writeable = False
    shift.flags.writeable = False

    return Ok(
        TargetDensity(
            name=f"{spec.kind.tag}(d={dim})",
            dim=dim,
            smoothness=float(np.max(eigs)) + weight,
            strong_convexity=float(np.min(eigs)),
            minimizer=shift,
            potential=potential,
            grad=grad,
            laplacian=laplacian,
            precision=Nothing if weight else Some(eigs),
        )
    )


def find_minimizer(
    target: TargetDensity, tol: float, start: FloatArray | None = None
) -> Result[FloatArray, LshmcError]:
    """Locate the minimizer with Nesterov's accelerated gradient method.

    Uses step 1/L and constant momentum (sqrt(kappa) - 1) / (sqrt(kappa) + 1).
    The target's own `minimizer` field is not consulted.

    Returns:
        The first iterate with |grad f| <= tol, or a `ConvergenceError`
        once 10^4 * ceil(sqrt(kappa) * log(1/tol)) iterations are spent.
    """
    if not tol > 0.0:
        return Error(SpecError(f"tolerance must be positive, got {tol}"))

    sqrt_kappa = math.sqrt(target.kappa)
    momentum = (sqrt_kappa - 1.0) / (sqrt_kappa + 1.0)
    step = 1.0 / target.smoothness
    cap = 10_000 * math.ceil(sqrt_kappa * max(1.0, math.log(1.0 / tol)))

    x = np.zeros(target.dim) if start is None else as_vector(start, target.dim).copy()
    x_prev = x
    for iteration in range(cap + 1):
        g = target.grad(x)
        grad_norm = float(np.linalg.norm(g))
        if grad_norm <= tol:
            logger.debug("minimizer converged after %d iterations", iteration)
            return Ok(x)
        if not math.isfinite(grad_norm):
            return Error(ConvergenceError("gradient became non-finite", iteration, grad_norm))
        y = x + momentum * (x - x_prev)
        x_prev, x = x, y - step * target.grad(y)

    grad_norm = float(np.linalg.norm(target.grad(x)))
    return Error(ConvergenceError("accelerated gradient did not converge", cap, grad_norm))


def exact_draws(target: TargetDensity, rng: np.random.Generator, n: int) -> Result[FloatArray, SpecError]:
    """Draw `n` exact samples from a Gaussian target."""
    match target.precision:
        case Option(tag="some", some=precision):
            z = rng.standard_normal((n, target.dim))
            return Ok(target.minimizer + z / np.sqrt(precision))
        case _:
            return Error(SpecError(f"{target.name} has no closed-form stationary law"))


__all__ = [
    "HardInstance",
    "QuarticMix",
    "TargetDensity",
    "TargetKind",
    "TargetSpec",
    "exact_draws",
    "find_minimizer",
    "make_target",
]
