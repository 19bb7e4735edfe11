"""Statistics and empirical claim checks."""

from .claims import (
    ClaimCheck,
    EmpiricalSummary,
    OmegaThreshold,
    check_lower,
    check_upper,
    chi_sq_claim,
    concentration_claims,
    grad_concentration_report,
    omega_indicator,
    omega_threshold,
    overlap_claim,
    product_claims,
    proposal_overlap_tv,
    rejection_claim,
    rejection_probability,
    tail_key,
    tail_threshold,
)
from .marginals import coordinate_ks, marginal_cdf, projected_ks
from .stats import (
    ChiSquaredTail,
    MonteCarloEstimate,
    chi_sq_lower_tail_bound,
    chi_sq_tail_bound,
    kolmogorov_critical,
    ks_distance,
    normal_cdf,
    product_bound_check,
)


__all__ = [
    "ChiSquaredTail",
    "ClaimCheck",
    "EmpiricalSummary",
    "MonteCarloEstimate",
    "OmegaThreshold",
    "check_lower",
    "check_upper",
    "chi_sq_claim",
    "chi_sq_lower_tail_bound",
    "chi_sq_tail_bound",
    "concentration_claims",
    "coordinate_ks",
    "grad_concentration_report",
    "kolmogorov_critical",
    "ks_distance",
    "marginal_cdf",
    "normal_cdf",
    "omega_indicator",
    "omega_threshold",
    "overlap_claim",
    "product_bound_check",
    "product_claims",
    "projected_ks",
    "proposal_overlap_tv",
    "rejection_claim",
    "rejection_probability",
    "tail_key",
    "tail_threshold",
]
