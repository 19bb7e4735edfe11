"""Targets, the one-leapfrog HMC kernel and the error types."""

from . import hmc, target, validation
from .error import ClaimCheckFailed, ConvergenceError, InvalidStateError, LshmcError, SpecError, reject, unwrap
from .hmc import (
    EquivalenceReport,
    PhaseState,
    StepOutcome,
    StepSizePolicy,
    check_equivalence,
    default_step_size,
    hamiltonian,
    hmc_step,
    hmc_transition,
    leapfrog,
    mala_step,
    mala_transition,
    quadratic_delta_h,
    round_trip_error,
)
from .target import TargetDensity, TargetKind, TargetSpec, exact_draws, find_minimizer, make_target
from .typing import FloatArray
from .validation import CheckOutcome, ValidationReport, validate_target


__all__ = [
    "CheckOutcome",
    "ClaimCheckFailed",
    "ConvergenceError",
    "EquivalenceReport",
    "FloatArray",
    "InvalidStateError",
    "LshmcError",
    "PhaseState",
    "SpecError",
    "StepOutcome",
    "StepSizePolicy",
    "TargetDensity",
    "TargetKind",
    "TargetSpec",
    "ValidationReport",
    "check_equivalence",
    "default_step_size",
    "exact_draws",
    "find_minimizer",
    "hamiltonian",
    "hmc",
    "hmc_step",
    "hmc_transition",
    "leapfrog",
    "make_target",
    "mala_step",
    "mala_transition",
    "quadratic_delta_h",
    "reject",
    "round_trip_error",
    "target",
    "unwrap",
    "validate_target",
    "validation",
]
