"""Deterministic tropical linear algebra: monotone Min-Plus products and
convolution with derandomized modulus selection.

Public API lives in the submodules and is re-exported here.
"""
from .config import SolverConfig
from .convolution import minplus_conv_monotone, solve_verification_conv
from .core import (
    ConvVerificationInstance,
    DimensionMismatchError,
    IntArray,
    IntMatrix,
    MonotoneTag,
    PromiseViolationError,
    ValidationReport,
    VerificationInstance,
    WitnessMask,
    minplus_convolution_naive,
    minplus_product_naive,
    validate_instance,
    validate_promises,
    witness_mask_naive,
)
from .modulus import ModulusReport, find_good_modulus
from .product_col import minplus_monotone_col, solve_verification_col
from .product_row import minplus_monotone_row, solve_verification_row

__version__ = "0.1.0"

__all__ = [
    "ConvVerificationInstance",
    "DimensionMismatchError",
    "IntArray",
    "IntMatrix",
    "ModulusReport",
    "MonotoneTag",
    "PromiseViolationError",
    "SolverConfig",
    "ValidationReport",
    "VerificationInstance",
    "WitnessMask",
    "find_good_modulus",
    "minplus_conv_monotone",
    "minplus_convolution_naive",
    "minplus_monotone_col",
    "minplus_monotone_row",
    "minplus_product_naive",
    "solve_verification_col",
    "solve_verification_conv",
    "solve_verification_row",
    "validate_instance",
    "validate_promises",
    "witness_mask_naive",
    "__version__",
]
