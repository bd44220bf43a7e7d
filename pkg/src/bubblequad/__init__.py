"""Compressed QMC volume and surface quadrature on unions of balls."""

from .compress import CompressedRule, CompressionReport, compress, qmc_moments, select_surface_basis, validate_rule
from .geometry import Ball, Box3, MultiBubble, bounding_box, contains, load_bubble, on_union_surface, sphere_map
from .lowdisc import WeightedPointSet, halton, halton_point, radical_inverse, sample_surface, sample_volume
from .polybasis import ChebBasis, cheb_vandermonde, dim_poly, graded_lex
from .quadrature import Integrand, apply, error_study, exactness_trials, test_functions

__version__ = "0.1.0"

__all__ = [
    "Ball", "Box3", "MultiBubble", "bounding_box", "contains", "on_union_surface", "sphere_map",
    "load_bubble", "WeightedPointSet", "radical_inverse", "halton_point", "halton",
    "sample_volume", "sample_surface", "ChebBasis", "dim_poly", "graded_lex", "cheb_vandermonde",
    "CompressedRule", "CompressionReport", "qmc_moments", "select_surface_basis", "compress",
    "validate_rule", "Integrand", "apply", "test_functions", "exactness_trials", "error_study",
]
