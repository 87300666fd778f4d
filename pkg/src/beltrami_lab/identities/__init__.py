"""Verification of the boundary-integral identities of the kernel expansion."""

from .combinatorics import binom, binomial_failures, binomial_identity, binomial_valid_region
from .contour import (
    MultiIndexM,
    admissible_indices,
    area_integral,
    big_h,
    green_defect,
    h_derivative,
    h_function,
    kernel_expansion_defect,
    kernel_expansion_terms,
    kernel_K,
    plemelj_jump,
    taylor_remainder,
    taylor_remainder_exponent,
    validate_contour,
)
from .grid_checks import (
    derivative_identity_defect,
    disk_profile,
    interior_pairs,
    interior_points,
    radial_vanish,
    taper_profile,
)
from .report import (
    REGISTRY,
    VerificationReport,
    default_suite,
    read_reports,
    run_suite,
    validate_suite,
    write_reports,
)

__all__ = [
    "MultiIndexM", "REGISTRY", "VerificationReport", "admissible_indices", "area_integral",
    "big_h", "binom", "binomial_failures", "binomial_identity", "binomial_valid_region",
    "default_suite", "derivative_identity_defect", "disk_profile", "green_defect",
    "h_derivative", "h_function", "interior_pairs", "interior_points", "kernel_K",
    "kernel_expansion_defect", "kernel_expansion_terms", "plemelj_jump", "radial_vanish",
    "read_reports", "run_suite", "taper_profile", "taylor_remainder",
    "taylor_remainder_exponent", "validate_contour", "validate_suite", "write_reports",
]
