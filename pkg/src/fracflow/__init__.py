"""Fractional exterior calculus on generalized polynomial vector fields.

Decide whether a dynamical system is a (fractional) gradient or
Hamiltonian system, reconstruct the potential or Hamiltonian, build
stationary-state surfaces, and integrate the flows.
"""

from .fracderiv import FracOrder, NonIntegrablePowerError, frac_deriv, frac_integral, kernel_basis
from .forms import (
    CLOSURE_TOL,
    ClosureReport,
    FracForm1,
    FracForm2,
    check_gradient,
    check_hamiltonian,
    exterior_d,
    exterior_d_1form,
)
from .numerics import gamma, gl_derivative, recip_gamma
from .polyexpr import (
    DomainError,
    ExprError,
    GenPoly,
    GenTerm,
    SystemSpec,
    coeff_distance,
    eval_poly,
    eval_poly_array,
    max_abs_coeff,
    parse_expression,
    to_text,
)
from .systems import (
    Mesh,
    NotClosedError,
    ReconstructionError,
    RegionReport,
    ScalarGrid,
    StationarySurface,
    catalog,
    count_regions,
    extract_isosurface,
    reconstruct_hamiltonian,
    reconstruct_potential,
    sample_grid,
    stationary_surface,
)
from .dynamics import (
    Trajectory,
    build_gradient_flow,
    build_hamiltonian_flow,
    diagnostics,
    integrate,
)

__version__ = "0.1.0"

__all__ = [
    "CLOSURE_TOL",
    "ClosureReport",
    "DomainError",
    "ExprError",
    "FracForm1",
    "FracForm2",
    "FracOrder",
    "GenPoly",
    "GenTerm",
    "Mesh",
    "NonIntegrablePowerError",
    "NotClosedError",
    "ReconstructionError",
    "RegionReport",
    "ScalarGrid",
    "StationarySurface",
    "SystemSpec",
    "Trajectory",
    "build_gradient_flow",
    "build_hamiltonian_flow",
    "catalog",
    "check_gradient",
    "check_hamiltonian",
    "coeff_distance",
    "count_regions",
    "diagnostics",
    "eval_poly",
    "eval_poly_array",
    "exterior_d",
    "exterior_d_1form",
    "extract_isosurface",
    "frac_deriv",
    "frac_integral",
    "gamma",
    "gl_derivative",
    "integrate",
    "kernel_basis",
    "max_abs_coeff",
    "parse_expression",
    "reconstruct_hamiltonian",
    "reconstruct_potential",
    "sample_grid",
    "stationary_surface",
    "to_text",
]
