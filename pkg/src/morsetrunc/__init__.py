"""Truncated Chern numbers on marked stratification trees, simplex integrals of
path functionals, and empirical checks of Morse-type cohomology bounds on
products of projective spaces."""

from __future__ import annotations

from .cohomology import (
    ChiProfile,
    CohomSpec,
    bott_h,
    chi_profile_sum,
    gg_rank,
    h_product,
    sym_power_chi,
)
from .errors import MorseTruncError
from .morse_bounds import (
    AsymptoticTrace,
    BoundReport,
    asymptotic_trace,
    comparison_leading,
    integral_bound_leading,
    morse_rhs_leading,
    twisted_integral_bound_leading,
    verify_integral_bound,
    verify_morse,
    volume_lower_bound,
)
from .prob_annex import (
    DeltaKSampler,
    MomentReport,
    closed_moments,
    dirichlet_density_constant,
    e_s_squared,
    verify_product_deviation,
    verify_variance_bound,
)
from .simplex import (
    LatticeSection,
    SurdValue,
    WeightedSimplex,
    fundamental_domain_volume,
    integrate_monomial,
    lattice_section,
    sample_uniform,
    simplex_volume,
)
from .strat_tree import (
    BundleCombo,
    MarkedTree,
    TruncatedChernVector,
    flag_tree,
    product_flag_tree,
    siu_tree,
    truncated_chern_inductive,
    truncated_chern_paths,
)
from .upsilon import IntegralResult, UpsilonSpec, upsilon_eval, upsilon_integral

__version__ = "0.1.0"

__all__ = [
    "AsymptoticTrace",
    "BoundReport",
    "BundleCombo",
    "ChiProfile",
    "CohomSpec",
    "DeltaKSampler",
    "IntegralResult",
    "LatticeSection",
    "MarkedTree",
    "MomentReport",
    "MorseTruncError",
    "SurdValue",
    "TruncatedChernVector",
    "UpsilonSpec",
    "WeightedSimplex",
    "asymptotic_trace",
    "bott_h",
    "chi_profile_sum",
    "closed_moments",
    "comparison_leading",
    "dirichlet_density_constant",
    "e_s_squared",
    "flag_tree",
    "fundamental_domain_volume",
    "gg_rank",
    "h_product",
    "integral_bound_leading",
    "integrate_monomial",
    "lattice_section",
    "morse_rhs_leading",
    "product_flag_tree",
    "sample_uniform",
    "simplex_volume",
    "siu_tree",
    "sym_power_chi",
    "truncated_chern_inductive",
    "truncated_chern_paths",
    "twisted_integral_bound_leading",
    "upsilon_eval",
    "upsilon_integral",
    "verify_integral_bound",
    "verify_morse",
    "verify_product_deviation",
    "verify_variance_bound",
    "volume_lower_bound",
]
