"""Open quantum Brownian motion: coefficients, field solver, moment and cumulant dynamics."""

__version__ = "0.1.0"

from .coefficients import (  # noqa: E402
    CoefficientSet, PhysicalParams, SpectralSpec, build_coefficients, direct_coefficients,
    kossakowski_determinant, principal_value,
)
from .field import BlochInit, Grid, HybridField, init_field  # noqa: E402

__all__ = [
    "__version__", "BlochInit", "CoefficientSet", "Grid", "HybridField", "PhysicalParams",
    "SpectralSpec", "build_coefficients", "direct_coefficients", "init_field",
    "kossakowski_determinant", "principal_value",
]
