"""lshmc library.

Metropolized Hamiltonian Monte Carlo with a single leapfrog step for
strongly logconcave densities, together with the diagnostics and
desk-scale experiments that check its quantitative guarantees.
"""

from . import core, diagnostics, experiments, sampler
from ._version import __version__
from .core import (
    ClaimCheckFailed,
    ConvergenceError,
    InvalidStateError,
    LshmcError,
    PhaseState,
    SpecError,
    StepOutcome,
    StepSizePolicy,
    TargetDensity,
    TargetKind,
    TargetSpec,
    check_equivalence,
    default_step_size,
    exact_draws,
    find_minimizer,
    hamiltonian,
    hmc_step,
    leapfrog,
    make_target,
    mala_step,
    unwrap,
    validate_target,
)
from .diagnostics import ClaimCheck, EmpiricalSummary, grad_concentration_report, ks_distance
from .sampler import (
    ChainResult,
    HmcConfig,
    auto_config,
    averaged_sample,
    boosted_sample,
    boosted_samples,
    iteration_budget,
    log_warmness,
    run_chain,
    run_chains,
    warm_start,
)


__all__ = [
    "ChainResult",
    "ClaimCheck",
    "ClaimCheckFailed",
    "ConvergenceError",
    "EmpiricalSummary",
    "HmcConfig",
    "InvalidStateError",
    "LshmcError",
    "PhaseState",
    "SpecError",
    "StepOutcome",
    "StepSizePolicy",
    "TargetDensity",
    "TargetKind",
    "TargetSpec",
    "__version__",
    "auto_config",
    "averaged_sample",
    "boosted_sample",
    "boosted_samples",
    "check_equivalence",
    "core",
    "default_step_size",
    "diagnostics",
    "exact_draws",
    "experiments",
    "find_minimizer",
    "grad_concentration_report",
    "hamiltonian",
    "hmc_step",
    "iteration_budget",
    "ks_distance",
    "leapfrog",
    "log_warmness",
    "make_target",
    "mala_step",
    "run_chain",
    "run_chains",
    "sampler",
    "unwrap",
    "validate_target",
    "warm_start",
]
