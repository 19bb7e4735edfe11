from __future__ import annotations

import math

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from lshmc.core.error import SpecError


class HmcConfig(BaseModel):
    """Parameters of a sampling run.

    Attributes:
        eta: Leapfrog step size.
        eps: Target total variation accuracy in (0, 1].
        k: Inner iteration budget; chains run k steps and the averaged
            sampler stops uniformly in {0, ..., k - 1}.
        outer_rounds: Number of averaged-sampler rounds of the boosted
            sampler, ceil(log(1/eps)) when built by `auto_config`.
        seed: Master seed; chain i uses child stream i.
        n_chains: Number of independent chains or replicates.
        record_every: Record interval for iterates, None for automatic
            thinning to at most 10^6 stored scalars.
    """

    model_config = ConfigDict(frozen=True)

    eta: float = Field(gt=0.0)
    eps: float = Field(default=0.1, gt=0.0, le=1.0)
    k: int = Field(default=1, ge=0)
    outer_rounds: int = Field(default=1, ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)
    n_chains: int = Field(default=1, ge=1)
    record_every: int | None = Field(default=None, ge=1)

    @field_validator("eta")
    @classmethod
    def _finite_eta(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("eta must be finite")
        return value


def build_config(**values: object) -> HmcConfig:
    """Validate keyword values into an `HmcConfig`, raising `SpecError`."""
    try:
        return HmcConfig.model_validate(values)
    except ValidationError as exn:
        raise SpecError(str(exn)) from exn


__all__ = ["HmcConfig", "build_config"]
