from __future__ import annotations

from typing import Any, TypeAlias

import numpy as np
import numpy.typing as npt

from .error import InvalidStateError, reject


FloatArray: TypeAlias = npt.NDArray[np.float64]
BoolArray: TypeAlias = npt.NDArray[np.bool_]
IntArray: TypeAlias = npt.NDArray[np.int64]


def as_vector(value: Any, dim: int | None = None, *, name: str = "vector") -> FloatArray:
    """Convert to a float64 array whose last axis has length `dim`.

    Batches of shape (n, dim) pass through unchanged.
    """
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if dim is not None and arr.shape[-1] != dim:
        reject(f"{name} has length {arr.shape[-1]}, expected {dim}")
    return arr


def ensure_finite(name: str, *arrays: FloatArray | float, iteration: int | None = None) -> None:
    """Raise `InvalidStateError` unless every entry is finite."""
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise InvalidStateError(f"non-finite {name}", iteration)


__all__ = ["BoolArray", "FloatArray", "IntArray", "as_vector", "ensure_finite"]
