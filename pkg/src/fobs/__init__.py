"""Lower-order functional observers with linear error dynamics for
discrete-time plants."""

from .linear import (
    BetaCoefficients,
    Infeasible,
    LinearDesign,
    ObserverRealization,
    build_condition_matrix,
    build_T,
    design_linear,
    minimal_order_search,
    realize_observer,
    solve_beta,
    verify_luenberger,
)
from .model import (
    LinearSystem,
    NonlinearSystem,
    NumericOverflowError,
    functional_sequence,
    iterate_map,
    observability_index,
)
from .nonlinear import (
    build_T_nonlinear,
    check_condition,
    condition_residual,
    fit_beta,
    sample_box,
    verify_design_conditions,
)
from .simulate import Trajectory, error_analysis, simulate
from .spectrum import CharPoly, companion_realization, poly_from_eigenvalues

__version__ = "0.1.0"

__all__ = [
    "BetaCoefficients",
    "build_condition_matrix",
    "build_T",
    "build_T_nonlinear",
    "CharPoly",
    "check_condition",
    "companion_realization",
    "condition_residual",
    "design_linear",
    "error_analysis",
    "fit_beta",
    "functional_sequence",
    "Infeasible",
    "iterate_map",
    "LinearDesign",
    "LinearSystem",
    "minimal_order_search",
    "NonlinearSystem",
    "NumericOverflowError",
    "observability_index",
    "ObserverRealization",
    "poly_from_eigenvalues",
    "realize_observer",
    "sample_box",
    "simulate",
    "solve_beta",
    "Trajectory",
    "verify_design_conditions",
    "verify_luenberger",
]
