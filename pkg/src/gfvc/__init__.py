"""Generalized fractional calculus of variations.

Kernel-parametrized fractional integrals and derivatives, the weighted
variational functional built from them, Euler-Lagrange / natural boundary /
isoperimetric conditions, a Ritz solver, and Noether-type checks.
"""

from .kernels import Kernel, KernelError, ParamSet, dual_pset, make_kernel
from .lagrangians import builtin_lagrangian
from .noether import (
    TransformationSpec,
    check_invariance,
    constant_of_motion,
    d_operator,
    i_operator,
    nci_residual,
    noether_residual,
)
from .operators import (
    DomainError,
    FunctionHandle,
    NonFiniteIntegrandError,
    a_op,
    b_op,
    check_ibp_b,
    check_ibp_k,
    k_op,
)
from .oscillator import (
    OscillatorConfig,
    analytic_damped_bvp,
    build_bck_problem,
    falva_residual,
    momentum_law_residual,
    rotation_law_residual,
)
from .quadrature import QuadratureSpec
from .ritz import Solution, SolverOptions, solve_isoperimetric, solve_ritz
from .variational import (
    IsoperimetricConstraint,
    LagrangianSpec,
    ProblemSpec,
    UsageError,
    el_residual,
    evaluate_functional,
    first_variation,
    natural_bc_residual,
    validate_problem,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
