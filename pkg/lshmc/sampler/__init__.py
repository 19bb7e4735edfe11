"""Sampling runs: warm starts, chains, averaged and boosted samplers."""

from .config import HmcConfig, build_config
from .driver import (
    ChainResult,
    EnsembleTrace,
    WarmnessReport,
    auto_config,
    averaged_sample,
    boosted_sample,
    boosted_samples,
    exact_log_warmness,
    iteration_budget,
    log_warmness,
    run_chain,
    run_chains,
    run_ensemble,
    warm_start,
    warm_starts,
)
from .streams import EnsembleNoise, chain_generator, spawn_generators


__all__ = [
    "ChainResult",
    "EnsembleNoise",
    "EnsembleTrace",
    "HmcConfig",
    "WarmnessReport",
    "auto_config",
    "averaged_sample",
    "boosted_sample",
    "boosted_samples",
    "build_config",
    "chain_generator",
    "exact_log_warmness",
    "iteration_budget",
    "log_warmness",
    "run_chain",
    "run_chains",
    "run_ensemble",
    "spawn_generators",
    "warm_start",
    "warm_starts",
]
