"""Numerical certification of complex-convexity constructions: boundary
classification, holomorphic peak functions, and shadows of domains in C^n."""

__version__ = "0.1.0"

from .builtins import make_builtin, parse_domain_arg
from .domain import (
    ComplexHyperplane,
    ComplexLine,
    DefiningFunction,
    DomainModel,
    SolverSettings,
    boundary_project,
    complex_tangent_basis,
    derivatives,
    hessian_form,
    sample_boundary,
    slc_margin,
)

__all__ = [
    "ComplexHyperplane",
    "ComplexLine",
    "DefiningFunction",
    "DomainModel",
    "SolverSettings",
    "boundary_project",
    "complex_tangent_basis",
    "derivatives",
    "hessian_form",
    "make_builtin",
    "parse_domain_arg",
    "sample_boundary",
    "slc_margin",
]
