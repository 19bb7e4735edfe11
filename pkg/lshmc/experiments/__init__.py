"""Desk-scale experiments and their output files."""

from .lower_bound import (
    LowerBoundRow,
    LowerBoundRunSpec,
    fit_collapse_exponent,
    lower_bound_claims,
    lower_bound_experiment,
)
from .report import chains_csv, emit_report, read_csv_table, write_chains, write_document, write_draws
from .scaling import ScalingRow, ScalingRunSpec, ScalingSlopes, fit_scaling_slopes, scaling_claims, scaling_study


__all__ = [
    "LowerBoundRow",
    "LowerBoundRunSpec",
    "ScalingRow",
    "ScalingRunSpec",
    "ScalingSlopes",
    "chains_csv",
    "emit_report",
    "fit_collapse_exponent",
    "fit_scaling_slopes",
    "lower_bound_claims",
    "lower_bound_experiment",
    "read_csv_table",
    "scaling_claims",
    "scaling_study",
    "write_chains",
    "write_document",
    "write_draws",
]
