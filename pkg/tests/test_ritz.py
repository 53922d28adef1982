import numpy as np
import pytest

from gfvc.lagrangians import builtin_lagrangian
from gfvc.ritz import (
    ConstraintError,
    RitzBasis,
    SolverOptions,
    bfgs,
    fd_gradient,
    solve_isoperimetric,
    solve_ritz,
)
from gfvc.variational import IsoperimetricConstraint, ProblemSpec, UsageError, el_residual_l2

from problems import ONE, damped_sho_exact, damped_sho_problem, dirichlet_problem, exp_line, expk, isoperimetric_problem

T = np.linspace(0, 1, 201)


def test_basis_vanishes_at_fixed_ends():
    basis = RitzBasis((0.0, 2.0), 6)
    np.testing.assert_allclose(basis.values(np.array([0.0, 2.0])), 0.0, atol=1e-14)


def test_free_left_basis_vanishes_only_at_right_end():
    basis = RitzBasis((0.0, 1.0), 5, "free_left")
    vals = basis.values(np.array([0.0, 1.0]))
    np.testing.assert_allclose(vals[:, 1], 0.0, atol=1e-14)
    assert np.max(np.abs(vals[:, 0])) > 0.1


def test_basis_derivatives_match_differences():
    basis = RitzBasis((0.0, 1.0), 5)
    t = np.linspace(0.1, 0.9, 9)
    h = 1e-6
    np.testing.assert_allclose(basis.first(t), (basis.values(t + h) - basis.values(t - h)) / (2 * h), atol=1e-7)
    np.testing.assert_allclose(basis.second(t), (basis.first(t + h) - basis.first(t - h)) / (2 * h), atol=1e-6)


def test_line_solution_exact():
    sol = solve_ritz(dirichlet_problem(), 8)
    np.testing.assert_allclose(sol.evaluator.value(T)[0], T, atol=1e-9)
    assert sol.diagnostics.converged
    assert sol.diagnostics.functional_value == pytest.approx(0.5, abs=1e-10)


def test_weighted_free_particle():
    c = 1.5
    sol = solve_ritz(dirichlet_problem(expk(c)), 14)
    np.testing.assert_allclose(sol.evaluator.value(T)[0], exp_line(c).value(T)[0], atol=1e-7)


def test_damped_oscillator_solution():
    sol = solve_ritz(damped_sho_problem(), 20)
    np.testing.assert_allclose(sol.evaluator.value(T)[0], damped_sho_exact()(T), atol=1e-6)
    assert sol.diagnostics.el_residual_l2 < 1e-4


def test_residual_does_not_grow_with_basis():
    problem = damped_sho_problem(0.3, 2.5)
    r5 = solve_ritz(problem, 5).diagnostics.el_residual_l2
    r20 = solve_ritz(problem, 20).diagnostics.el_residual_l2
    assert r20 <= r5


def test_non_convergence_is_flagged():
    sol = solve_ritz(damped_sho_problem(), 12, SolverOptions(max_iters=1), diagnostics=False)
    assert sol.diagnostics.non_converged
    assert sol.coefficients.shape == (1, 12)


def test_fd_gradient_of_quadratic():
    A = np.array([[3.0, 1.0], [1.0, 2.0]])

    def f(x):
        return 0.5 * x @ A @ x

    x = np.array([0.3, -1.2])
    np.testing.assert_allclose(fd_gradient(f, x, 1e-6), A @ x, atol=1e-7)


def test_bfgs_rosenbrock():
    def f(x):
        return (1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2

    res = bfgs(f, np.array([-1.2, 1.0]), lambda x: fd_gradient(f, x, 1e-7), 500, 1e-7)
    np.testing.assert_allclose(res.x, [1.0, 1.0], atol=1e-4)


def test_isoperimetric_parabola():
    sol = solve_isoperimetric(isoperimetric_problem(0.25), 8)
    np.testing.assert_allclose(sol.evaluator.value(T)[0], 1.5 * T * (1 - T), atol=1e-8)
    assert sol.diagnostics.multiplier == pytest.approx(6.0, abs=1e-6)
    assert sol.diagnostics.constraint_gap <= 1e-6


def test_isoperimetric_negative_area():
    sol = solve_isoperimetric(isoperimetric_problem(-0.5), 8)
    assert sol.diagnostics.multiplier == pytest.approx(-12.0, abs=1e-6)


def test_inactive_constraint_gives_zero_multiplier():
    lag = builtin_lagrangian("dirichlet", weight=1.0)
    G = builtin_lagrangian("area")
    problem = ProblemSpec(lag, (0.0, 1.0), (1.0,), (0.0,), isoperimetric=IsoperimetricConstraint(G, 0.5))
    sol = solve_isoperimetric(problem, 6)
    assert abs(sol.diagnostics.multiplier) <= 1e-6


def test_unattainable_constraint():
    # int y^2 / 2 cannot be negative
    lag = builtin_lagrangian("dirichlet", weight=1.0)
    G = builtin_lagrangian("half_square")
    problem = ProblemSpec(lag, (0.0, 1.0), (0.0,), (0.0,), isoperimetric=IsoperimetricConstraint(G, -1.0))
    with pytest.raises(ConstraintError, match="unattainable"):
        solve_isoperimetric(problem, 4, max_expansions=4)


def test_isoperimetric_needs_constraint():
    with pytest.raises(UsageError):
        solve_isoperimetric(dirichlet_problem(), 4)


def test_free_left_solution_has_zero_slope():
    lag = builtin_lagrangian("quadratic", alpha_kernel=ONE, yp=1.0, source=1.0)
    problem = ProblemSpec(lag, (0.0, 1.0), (1.0,), None, boundary_mode="free_left")
    sol = solve_ritz(problem, 6)
    np.testing.assert_allclose(sol.evaluator.value(T)[0], 0.5 * T**2 + 0.5, atol=1e-9)
    assert abs(sol.diagnostics.natural_bc_residual[0]) < 1e-6
    assert el_residual_l2(problem, sol.evaluator) < 1e-6
