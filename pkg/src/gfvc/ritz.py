"""Ritz direct method for fixed, free-left and isoperimetric problems."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre
from scipy import optimize
from scipy.optimize._linesearch import LineSearchWarning

from .kernels import ParamSet
from .operators import FunctionHandle, b_op, branch_nodes, k_op
from .variational import (
    LagrangianSpec,
    ProblemSpec,
    UsageError,
    el_residual_l2,
    evaluate_functional,
    natural_bc_residual,
)

logger = logging.getLogger(__name__)


class LineSearchError(RuntimeError):
    """Line search could not reduce the objective away from a stationary point."""

    def __init__(self, message: str, x: np.ndarray, fval: float, grad: np.ndarray):
        self.x = np.array(x)
        self.fval = fval
        self.grad = np.array(grad)
        dump = np.array2string(self.x, precision=6, separator=", ")
        super().__init__(f"{message}; f = {fval!r}, |g|_inf = {np.max(np.abs(grad)):.3e}, x = {dump}")


class ConstraintError(RuntimeError):
    """No multiplier found that meets the isoperimetric target."""


@dataclass(frozen=True)
class SolverOptions:
    max_iters: int = 200
    grad_step: float = 1e-6
    tol: float = 1e-8


@dataclass
class Diagnostics:
    functional_value: float
    el_residual_l2: float
    natural_bc_residual: np.ndarray | None = None
    multiplier: float | None = None
    constraint_gap: float | None = None
    converged: bool = True
    iterations: int = 0
    grad_inf_norm: float = 0.0
    constraint_el_residual_l2: float | None = None

    @property
    def non_converged(self) -> bool:
        return not self.converged


class RitzBasis:
    """Integrated-Legendre basis on ``[a, b]``.

    ``fixed_both``: ``(P_{l+1} - P_{l-1}) / sqrt(2 (2l + 1))``, ``l = 1..M``,
    all vanishing at both ends with orthonormal derivatives in the
    reference variable.  ``free_left``: ``(1 - x) / sqrt(2)`` followed by
    the first ``M - 1`` of those; every member vanishes at ``b``.
    """

    def __init__(self, interval, size: int, mode: str = "fixed_both"):
        if size < 1:
            raise ValueError("basis size must be >= 1")
        self.a, self.b = map(float, interval)
        self.size = size
        self.mode = mode
        C = np.zeros((size + 2, size))
        if mode == "fixed_both":
            ls = range(1, size + 1)
            cols = range(size)
        else:
            C[0, 0] = 1.0 / np.sqrt(2.0)
            C[1, 0] = -1.0 / np.sqrt(2.0)
            ls = range(1, size)
            cols = range(1, size)
        for l, j in zip(ls, cols):
            s = 1.0 / np.sqrt(2.0 * (2 * l + 1))
            C[l + 1, j] = s
            C[l - 1, j] -= s
        self._c0 = C
        self._c1 = legendre.legder(C, 1, axis=0)
        self._c2 = legendre.legder(C, 2, axis=0)
        self._scale = 2.0 / (self.b - self.a)

    def _x(self, t):
        return self._scale * (np.asarray(t, dtype=float) - self.a) - 1.0

    def values(self, t):
        return legendre.legval(self._x(t), self._c0)

    def first(self, t):
        return self._scale * legendre.legval(self._x(t), self._c1)

    def second(self, t):
        return self._scale**2 * legendre.legval(self._x(t), self._c2)


class RitzTrajectory:
    """``y_j(t) = l_j(t) + sum_l c_jl phi_l(t)`` with the boundary lift ``l``."""

    def __init__(self, problem: ProblemSpec, basis: RitzBasis):
        self.problem = problem
        self.basis = basis
        self.N = problem.lagrangian.N
        yb = np.asarray(problem.y_b, dtype=float)
        if problem.boundary_mode == "fixed_both":
            ya = np.asarray(problem.y_a, dtype=float)
            self._offset = ya
            self._slope = (yb - ya) / (problem.b - problem.a)
        else:
            self._offset = yb
            self._slope = np.zeros_like(yb)

    def lift(self) -> FunctionHandle:
        return self.handle(np.zeros((self.N, self.basis.size)))

    def handle(self, coeffs) -> FunctionHandle:
        C = np.asarray(coeffs, dtype=float).reshape(self.N, self.basis.size)
        a = self.problem.a
        off, slope, basis = self._offset, self._slope, self.basis

        def func(t):
            t = np.asarray(t, dtype=float)
            return off[:, None] + slope[:, None] * (t - a)[None, :] + C @ basis.values(t)

        def deriv(t):
            t = np.asarray(t, dtype=float)
            return slope[:, None] + C @ basis.first(t)

        def deriv2(t):
            return C @ basis.second(np.asarray(t, dtype=float))

        return FunctionHandle(func, deriv, self.problem.interval, deriv2, label="ritz")


@dataclass
class Solution:
    coefficients: np.ndarray
    evaluator: FunctionHandle
    diagnostics: Diagnostics
    basis: RitzBasis = field(repr=False)


def fd_gradient(fun, x: np.ndarray, step: float) -> np.ndarray:
    """Central differences with step ``step * (1 + |x_i|)``."""
    g = np.empty_like(x)
    for i in range(x.size):
        h = step * (1.0 + abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (fun(xp) - fun(xm)) / (2 * h)
    return g


@dataclass
class _BFGSResult:
    x: np.ndarray
    fun: float
    grad: np.ndarray
    iterations: int
    converged: bool


def bfgs(fun, x0, grad, max_iters: int, tol: float) -> _BFGSResult:
    """BFGS on the inverse Hessian with a Wolfe line search.

    Falls back to Armijo backtracking when the Wolfe search fails.  Stops
    when ``|grad|_inf <= tol``.
    """
    x = np.array(x0, dtype=float)
    f = fun(x)
    g = grad(x)
    n = x.size
    H = np.eye(n)
    first = True
    for it in range(max_iters):
        if np.max(np.abs(g)) <= tol:
            return _BFGSResult(x, f, g, it, True)
        p = -H @ g
        slope = g @ p
        if slope >= 0:
            H = np.eye(n)
            p = -g
            slope = g @ p
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LineSearchWarning)
            alpha, *_ = optimize.line_search(fun, grad, x, p, gfk=g, old_fval=f, c2=0.9, maxiter=30)
        if alpha is None:
            alpha = 1.0
            while alpha > 1e-12 and fun(x + alpha * p) > f + 1e-4 * alpha * slope:
                alpha *= 0.5
            if alpha <= 1e-12:
                if np.max(np.abs(g)) <= 10 * tol:
                    return _BFGSResult(x, f, g, it, True)
                raise LineSearchError("line search failed", x, f, g)
        s = alpha * p
        x_new = x + s
        f_new = fun(x_new)
        g_new = grad(x_new)
        yv = g_new - g
        sy = s @ yv
        if sy > 1e-14 * np.linalg.norm(s) * np.linalg.norm(yv):
            if first:
                H = (sy / (yv @ yv)) * np.eye(n)
                first = False
            rho = 1.0 / sy
            V = np.eye(n) - rho * np.outer(s, yv)
            H = V @ H @ V.T + rho * np.outer(s, s)
        x, f, g = x_new, f_new, g_new
    converged = bool(np.max(np.abs(g)) <= tol)
    return _BFGSResult(x, f, g, max_iters, converged)


def _scalar_parts(lag: LagrangianSpec, h: FunctionHandle, T: np.ndarray, inner):
    """Rows ``y, y', B_i[y], K_k[y]`` of a handle at ``T``, shape ``(2 + n + m, N, nt)``."""
    rows = [h.value(T), h.derivative(T)]
    rows += [b_op(kern, P, h, T, inner) for kern, P in lag.beta]
    rows += [k_op(kern, R, h, T, inner) for kern, R in lag.gamma]
    return np.stack(rows)


class _AffineFunctional:
    """Discrete functional as a function of the Ritz coefficients.

    All bundle operators are linear, so the bundle at the outer nodes is
    the lift's bundle plus a fixed linear map of the coefficients.  It is
    tabulated once; each evaluation then only calls ``F``.
    """

    def __init__(self, problem: ProblemSpec, traj: RitzTrajectory, lag: LagrangianSpec):
        P = ParamSet(problem.a, problem.b, 1.0, 0.0)
        T, W = branch_nodes(lag.alpha_kernel, P, np.array([problem.b]), problem.quad)
        self.t = T[0]
        self.w = W[0]
        self.lag = lag
        self.N = traj.N
        self.M = traj.basis.size
        inner = problem.inner
        self.base = _scalar_parts(lag, traj.lift(), self.t, inner)
        phi = FunctionHandle(traj.basis.values, traj.basis.first, problem.interval, label="basis")
        # (rows, M, nt): each basis function acts on every component alike
        self.table = _scalar_parts(lag, phi, self.t, inner)

    def bundle(self, c):
        C = np.asarray(c, dtype=float).reshape(self.N, self.M)
        parts = self.base + np.einsum("jl,rlt->rjt", C, self.table)
        n, m = self.lag.n, self.lag.m
        return (self.t, parts[0], parts[1], parts[2 : 2 + n], parts[2 + n : 2 + n + m])

    def __call__(self, c) -> float:
        vals = self.lag.evaluate(self.bundle(c))
        out = float(np.dot(self.w, vals))
        return out if np.isfinite(out) else np.inf


def solve_ritz(
    problem: ProblemSpec,
    basis_size: int,
    opts: SolverOptions | None = None,
    lagrangian: LagrangianSpec | None = None,
    x0=None,
    diagnostics: bool = True,
) -> Solution:
    """Minimize the discretized functional over the Ritz space.

    ``lagrangian`` overrides the problem's integrand (used for ``F - lambda G``).
    Non-convergence returns the last iterate with ``converged=False``.
    """
    opts = opts or SolverOptions()
    basis = RitzBasis(problem.interval, basis_size, problem.boundary_mode)
    traj = RitzTrajectory(problem, basis)
    lag = lagrangian or problem.lagrangian

    J = _AffineFunctional(problem, traj, lag)

    cache: dict[bytes, np.ndarray] = {}

    def grad(c):
        key = np.asarray(c, dtype=float).tobytes()
        if key not in cache:
            if len(cache) > 8:
                cache.clear()
            cache[key] = fd_gradient(J, np.asarray(c, dtype=float), opts.grad_step)
        return cache[key]

    start = np.zeros(traj.N * basis_size) if x0 is None else np.asarray(x0, dtype=float).ravel()
    res = bfgs(J, start, grad, opts.max_iters, opts.tol)
    if not res.converged:
        logger.warning("solve_ritz: not converged after %d iterations (|g| = %.3e)",
                       res.iterations, np.max(np.abs(res.grad)))
    coeffs = res.x.reshape(traj.N, basis_size)
    y = traj.handle(coeffs)
    diag = Diagnostics(
        functional_value=evaluate_functional(problem, y, lagrangian=lag),
        el_residual_l2=float("nan"),
        converged=res.converged,
        iterations=res.iterations,
        grad_inf_norm=float(np.max(np.abs(res.grad))),
    )
    if diagnostics:
        diag.el_residual_l2 = el_residual_l2(problem, y, lagrangian=lag)
        if problem.boundary_mode == "free_left":
            diag.natural_bc_residual = natural_bc_residual(problem, y, lagrangian=lag)
    return Solution(coeffs, y, diag, basis)


def solve_isoperimetric(
    problem: ProblemSpec,
    basis_size: int,
    opts: SolverOptions | None = None,
    max_expansions: int = 50,
    max_secant: int = 30,
) -> Solution:
    """Find ``lambda`` so the extremal of ``F - lambda G`` meets ``I(y) = xi``.

    Secant iteration on ``lambda -> I(y*(lambda)) - xi``; if that stalls, a
    bracket is grown geometrically and closed with Brent's method.
    """
    if problem.isoperimetric is None:
        raise UsageError("problem has no isoperimetric constraint")
    opts = opts or SolverOptions(tol=1e-10)
    G = problem.isoperimetric.G
    xi = float(problem.isoperimetric.xi)
    gap_tol = 1e-7 * (1.0 + abs(xi))
    state = {"x0": None}
    memo: dict[float, tuple[float, Solution]] = {}

    def phi(lam: float) -> float:
        lam = float(lam)
        if lam in memo:
            return memo[lam][0]
        H = problem.lagrangian.combine(G, -lam)
        sol = solve_ritz(problem, basis_size, opts, lagrangian=H, x0=state["x0"], diagnostics=False)
        if not sol.diagnostics.converged:
            raise ConstraintError(f"inner solve did not converge at lambda = {lam!r}")
        state["x0"] = sol.coefficients
        val = evaluate_functional(problem, sol.evaluator, lagrangian=G) - xi
        memo[lam] = (val, sol)
        return val

    lam = _secant(phi, 0.0, 1.0, gap_tol, max_secant)
    if lam is None:
        lo, hi = _expand_bracket(phi, 0.0, max_expansions)
        lam = optimize.brentq(phi, lo, hi, xtol=1e-13, rtol=1e-13)
        phi(lam)

    sol = memo[float(lam)][1]
    y = sol.evaluator
    H = problem.lagrangian.combine(G, -lam)
    diag = sol.diagnostics
    diag.functional_value = evaluate_functional(problem, y)
    diag.multiplier = float(lam)
    diag.constraint_gap = abs(memo[float(lam)][0])
    diag.el_residual_l2 = el_residual_l2(problem, y, lagrangian=H)
    diag.constraint_el_residual_l2 = el_residual_l2(problem, y, lagrangian=G)
    if diag.constraint_el_residual_l2 < 1e-6:
        logger.warning("solution is (nearly) an extremal of the constraint functional; "
                       "the multiplier rule does not apply")
    return Solution(sol.coefficients, y, diag, sol.basis)


def _secant(phi, l0: float, l1: float, tol: float, max_iter: int):
    f0 = phi(l0)
    if abs(f0) <= tol:
        return l0
    f1 = phi(l1)
    for _ in range(max_iter):
        if abs(f1) <= tol:
            return l1
        if f1 == f0 or not np.isfinite(f1):
            return None
        l2 = l1 - f1 * (l1 - l0) / (f1 - f0)
        if not np.isfinite(l2) or abs(l2) > 1e12:
            return None
        l0, f0 = l1, f1
        l1, f1 = l2, phi(l2)
    return l1 if abs(f1) <= tol else None


def _expand_bracket(phi, center: float, max_expansions: int) -> tuple[float, float]:
    f0 = phi(center)
    step = 1.0
    for _ in range(max_expansions):
        for cand in (center - step, center + step):
            fc = phi(cand)
            if np.sign(fc) != np.sign(f0):
                return (min(center, cand), max(center, cand))
        step *= 2.0
    raise ConstraintError(
        f"no sign change of I(y) - xi within {max_expansions} expansions; "
        "the constraint value may be unattainable"
    )


__all__ = [
    "Diagnostics",
    "LineSearchError",
    "ConstraintError",
    "RitzBasis",
    "RitzTrajectory",
    "Solution",
    "SolverOptions",
    "bfgs",
    "fd_gradient",
    "solve_isoperimetric",
    "solve_ritz",
]
