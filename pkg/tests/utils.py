from collections.abc import Sequence
from typing import Any, TypeVar

import numpy as np

from expression import Nothing, Result, Some
from lshmc.core.target import TargetDensity, TargetKind, TargetSpec, make_target


_T = TypeVar("_T")


def ok(result: Result[_T, Any]) -> _T:
    match result:
        case Result(tag="ok", ok=value):
            return value
        case Result(error=error):
            raise AssertionError(f"expected Ok, got Error({error!r})")


def gaussian(eigs: Sequence[float], shift: Sequence[float] | None = None) -> TargetDensity:
    spec = TargetSpec(TargetKind.GaussianDiag(tuple(eigs)), Nothing if shift is None else Some(tuple(shift)))
    return ok(make_target(spec))


def iso(dim: int) -> TargetDensity:
    return ok(make_target(TargetSpec(TargetKind.GaussianIso(dim))))


def hard(kappa: float, dim: int) -> TargetDensity:
    return ok(make_target(TargetSpec(TargetKind.Hard(kappa, dim))))


def quartic(eigs: Sequence[float], weight: float = 1.0) -> TargetDensity:
    return ok(make_target(TargetSpec(TargetKind.Quartic(tuple(eigs), weight))))


def spread(kappa: float, dim: int) -> TargetDensity:
    """Diagonal Gaussian with eigenvalues spaced geometrically from 1 to kappa."""
    return gaussian(np.geomspace(1.0, kappa, dim).tolist())


def flat_target(dim: int) -> TargetDensity:
    """Constant potential; the declared constants are placeholders."""

    def potential(x: Any) -> Any:
        return np.zeros(np.shape(x)[:-1])

    def grad(x: Any) -> Any:
        return np.zeros(np.shape(x))

    return TargetDensity(
        name="flat",
        dim=dim,
        smoothness=1.0,
        strong_convexity=1.0,
        minimizer=np.zeros(dim),
        potential=potential,
        grad=grad,
        laplacian=potential,
    )
