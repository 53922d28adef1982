"""Variational problems weighted by a generalized fractional integral.

The functional is

    J(y) = int_a^b k(b, t) F(t, y, y', B_1[y], ..., B_n[y], K_1[y], ..., K_m[y]) dt

where each ``B_i`` is a generalized Caputo operator (kernel of order
``1 - beta_i``, p-set ``P_i``) and each ``K_k`` a generalized fractional
integral (kernel of order ``gamma_k``, p-set ``R_k``).

Partial derivatives of ``F`` use flat argument numbering starting at 1 for
``t``: indices ``2..N+1`` are the ``y`` block, ``N+2..2N+1`` the ``y'``
block, then ``n`` blocks for the ``B`` arguments and ``m`` blocks for the
``K`` arguments.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple

import numpy as np

from .kernels import Kernel, ParamSet
from .operators import (
    DEFAULT_QUAD,
    FunctionHandle,
    a_op,
    b_op,
    default_diff_step,
    k_op,
    richardson_derivative,
)
from .quadrature import QuadratureSpec

BOUNDARY_MODES = ("fixed_both", "free_left")


class UsageError(ValueError):
    """Operation called on a problem of the wrong shape."""


class Bundle(NamedTuple):
    """Arguments of ``F`` along a trajectory.

    Shapes: ``t (nt,)``, ``y (N, nt)``, ``yp (N, nt)``, ``v (n, N, nt)``,
    ``w (m, N, nt)``.
    """

    t: np.ndarray
    y: np.ndarray
    yp: np.ndarray
    v: np.ndarray
    w: np.ndarray


class Partials(NamedTuple):
    y: np.ndarray
    yp: np.ndarray
    v: np.ndarray
    w: np.ndarray


@dataclass(frozen=True)
class LagrangianSpec:
    """``F`` with its first partials and the operator roster.

    ``F(t, y, yp, v, w)`` returns shape ``(nt,)``; ``grad`` returns the four
    partial blocks with the same shapes as the arguments.
    """

    F: Callable = field(compare=False)
    grad: Callable = field(compare=False)
    N: int = 1
    alpha_kernel: Kernel | None = None
    beta: tuple[tuple[Kernel, ParamSet], ...] = ()
    gamma: tuple[tuple[Kernel, ParamSet], ...] = ()
    name: str = "custom"
    params: tuple = ()

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.alpha_kernel is None:
            raise ValueError("alpha_kernel is required")
        object.__setattr__(self, "beta", tuple(tuple(b) for b in self.beta))
        object.__setattr__(self, "gamma", tuple(tuple(g) for g in self.gamma))

    @property
    def n(self) -> int:
        return len(self.beta)

    @property
    def m(self) -> int:
        return len(self.gamma)

    @property
    def nargs(self) -> int:
        """Number of flat arguments, ``t`` included."""
        return 1 + (self.n + self.m + 2) * self.N

    def block(self, index: int) -> tuple[str, int, int]:
        """Map a flat partial index to ``(block, block_number, component)``.

        >>> from gfvc.kernels import make_kernel
        >>> lag = LagrangianSpec(None, None, N=2, alpha_kernel=make_kernel("constant_one"))
        >>> lag.block(2), lag.block(5)
        (('y', 0, 0), ('yp', 0, 1))
        """
        N = self.N
        if not (2 <= index <= self.nargs):
            raise IndexError(f"partial index {index} outside 2..{self.nargs}")
        slot, comp = divmod(index - 2, N)
        if slot == 0:
            return ("y", 0, comp)
        if slot == 1:
            return ("yp", 0, comp)
        if slot < 2 + self.n:
            return ("v", slot - 2, comp)
        return ("w", slot - 2 - self.n, comp)

    def index(self, block: str, number: int, comp: int) -> int:
        base = {"y": 0, "yp": 1, "v": 2 + number, "w": 2 + self.n + number}[block]
        return 2 + base * self.N + comp

    def partial(self, index: int, bundle: Bundle) -> np.ndarray:
        blk, num, comp = self.block(index)
        parts = Partials(*self.grad(*bundle))
        arr = getattr(parts, blk)
        return arr[comp] if blk in ("y", "yp") else arr[num, comp]

    def flatten(self, bundle: Bundle) -> np.ndarray:
        t, y, yp, v, w = bundle
        nt = t.shape[0]
        rows = [t[None, :], y, yp, v.reshape(-1, nt), w.reshape(-1, nt)]
        return np.concatenate(rows, axis=0)

    def unflatten(self, flat: np.ndarray) -> Bundle:
        N, n, m = self.N, self.n, self.m
        nt = flat.shape[1]
        t = flat[0]
        y = flat[1 : 1 + N]
        yp = flat[1 + N : 1 + 2 * N]
        v = flat[1 + 2 * N : 1 + (2 + n) * N].reshape(n, N, nt)
        w = flat[1 + (2 + n) * N :].reshape(m, N, nt)
        return Bundle(t, y, yp, v, w)

    def evaluate(self, bundle: Bundle) -> np.ndarray:
        return np.asarray(self.F(*bundle), dtype=float)

    def partials(self, bundle: Bundle) -> Partials:
        return Partials(*(np.asarray(p, dtype=float) for p in self.grad(*bundle)))

    def same_roster(self, other: LagrangianSpec) -> bool:
        return (
            self.N == other.N
            and self.alpha_kernel == other.alpha_kernel
            and self.beta == other.beta
            and self.gamma == other.gamma
        )

    def combine(self, other: LagrangianSpec, coef: float) -> LagrangianSpec:
        """``F + coef * G`` over a shared roster."""
        if not self.same_roster(other):
            raise UsageError("combined integrands must share N, kernels and p-sets")
        F1, F2, g1, g2 = self.F, other.F, self.grad, other.grad

        def F(t, y, yp, v, w):
            return F1(t, y, yp, v, w) + coef * F2(t, y, yp, v, w)

        def grad(t, y, yp, v, w):
            p1 = g1(t, y, yp, v, w)
            p2 = g2(t, y, yp, v, w)
            return tuple(np.asarray(a) + coef * np.asarray(b) for a, b in zip(p1, p2))

        return replace(self, F=F, grad=grad, name=f"{self.name}{coef:+g}*{other.name}", params=())


@dataclass(frozen=True)
class IsoperimetricConstraint:
    G: LagrangianSpec
    xi: float


@dataclass(frozen=True)
class ProblemSpec:
    lagrangian: LagrangianSpec
    interval: tuple[float, float]
    y_b: tuple[float, ...]
    y_a: tuple[float, ...] | None = None
    boundary_mode: str = "fixed_both"
    isoperimetric: IsoperimetricConstraint | None = None
    quad: QuadratureSpec = field(default_factory=lambda: QuadratureSpec(24, 6, 2.0))
    inner_quad: QuadratureSpec | None = None

    def __post_init__(self):
        a, b = self.interval
        if not a < b:
            raise ValueError("interval must satisfy a < b")
        object.__setattr__(self, "interval", (float(a), float(b)))
        if self.boundary_mode not in BOUNDARY_MODES:
            raise ValueError(f"boundary_mode must be one of {BOUNDARY_MODES}")
        N = self.lagrangian.N
        object.__setattr__(self, "y_b", tuple(float(v) for v in np.atleast_1d(self.y_b)))
        if len(self.y_b) != N:
            raise ValueError(f"y_b needs {N} components")
        if self.boundary_mode == "fixed_both":
            if self.y_a is None:
                raise ValueError("fixed_both requires y_a")
            object.__setattr__(self, "y_a", tuple(float(v) for v in np.atleast_1d(self.y_a)))
            if len(self.y_a) != N:
                raise ValueError(f"y_a needs {N} components")
        elif self.y_a is not None:
            raise ValueError("free_left requires y_a to be absent")
        for kern, P in self.lagrangian.beta + self.lagrangian.gamma:
            if (P.a, P.b) != self.interval:
                raise ValueError("operator p-sets must span the problem interval")
        if self.isoperimetric is not None:
            if not self.lagrangian.same_roster(self.isoperimetric.G):
                raise ValueError("constraint integrand must share the problem's kernels")

    @property
    def a(self) -> float:
        return self.interval[0]

    @property
    def b(self) -> float:
        return self.interval[1]

    @property
    def pset(self) -> ParamSet:
        """P-set of the functional itself, evaluated at ``x = b``."""
        return ParamSet(self.a, self.b, 1.0, 0.0)

    @property
    def inner(self) -> QuadratureSpec:
        return self.inner_quad or self.quad.halved()

    def weight(self, t) -> np.ndarray:
        """``k_alpha(b, t)``."""
        return np.asarray(self.lagrangian.alpha_kernel(self.b, t), dtype=float)


def compute_bundle(
    lag: LagrangianSpec, y: FunctionHandle, t, inner: QuadratureSpec
) -> Bundle:
    t = np.asarray(t, dtype=float).reshape(-1)
    yv = y.value(t)
    yp = y.derivative(t)
    N, nt = yv.shape
    v = np.empty((lag.n, N, nt))
    w = np.empty((lag.m, N, nt))
    for i, (kern, P) in enumerate(lag.beta):
        v[i] = b_op(kern, P, y, t, inner)
    for k, (kern, R) in enumerate(lag.gamma):
        w[k] = k_op(kern, R, y, t, inner)
    return Bundle(t, yv, yp, v, w)


def _integrand(problem: ProblemSpec, lag: LagrangianSpec, y: FunctionHandle, inner) -> FunctionHandle:
    def F(t):
        return lag.evaluate(compute_bundle(lag, y, t, inner))

    return FunctionHandle(F, domain=problem.interval, label="F")


def functional_on(
    problem: ProblemSpec,
    y: FunctionHandle,
    ta: float,
    tb: float,
    quad: QuadratureSpec | None = None,
    inner_quad: QuadratureSpec | None = None,
    lagrangian: LagrangianSpec | None = None,
) -> float:
    """``int_ta^tb k(tb, t) F(bundle(t)) dt``; the bundle operators keep their own p-sets."""
    lag = lagrangian or problem.lagrangian
    quad = quad or problem.quad
    inner = inner_quad or problem.inner
    P = ParamSet(ta, tb, 1.0, 0.0)
    return float(k_op(lag.alpha_kernel, P, _integrand(problem, lag, y, inner), tb, quad)[0])


def evaluate_functional(
    problem: ProblemSpec,
    y: FunctionHandle,
    quad: QuadratureSpec | None = None,
    inner_quad: QuadratureSpec | None = None,
    lagrangian: LagrangianSpec | None = None,
) -> float:
    """Value of the functional at the trajectory ``y``."""
    return functional_on(problem, y, problem.a, problem.b, quad, inner_quad, lagrangian)


def residual_grid(problem: ProblemSpec, points: int = 32, diff_step: float | None = None) -> np.ndarray:
    """Chebyshev points kept two stencil widths away from the endpoints."""
    h = default_diff_step(problem.pset) if diff_step is None else float(np.max(diff_step))
    lo, hi = problem.a + 2 * h, problem.b - 2 * h
    k = np.arange(points)
    return 0.5 * (lo + hi) - 0.5 * (hi - lo) * np.cos((k + 0.5) * np.pi / points)


def _weighted_partial(problem, lag, y, inner, block: str, number: int) -> FunctionHandle:
    def func(t):
        parts = lag.partials(compute_bundle(lag, y, t, inner))
        arr = getattr(parts, block)
        if block in ("v", "w"):
            arr = arr[number]
        return problem.weight(t)[None, :] * arr

    return FunctionHandle(func, domain=problem.interval, label=f"k*dF/d{block}{number}")


def el_residual(
    problem: ProblemSpec,
    y: FunctionHandle,
    t_grid=None,
    quad: QuadratureSpec | None = None,
    inner_quad: QuadratureSpec | None = None,
    diff_step=None,
    lagrangian: LagrangianSpec | None = None,
) -> np.ndarray:
    """Left-hand side of the generalized Euler-Lagrange system, shape ``(N, len(t_grid))``.

    ``diff_step`` may be a scalar or one step per grid point.
    """
    lag = lagrangian or problem.lagrangian
    quad = quad or problem.quad
    inner = inner_quad or problem.inner
    h = default_diff_step(problem.pset) if diff_step is None else diff_step
    t = residual_grid(problem, diff_step=h) if t_grid is None else np.asarray(t_grid, dtype=float)
    t = t.reshape(-1)

    parts = lag.partials(compute_bundle(lag, y, t, inner))
    res = problem.weight(t)[None, :] * parts.y
    for i, (kern, P) in enumerate(lag.beta):
        g = _weighted_partial(problem, lag, y, inner, "v", i)
        res = res - a_op(kern, P.dual(), g, t, quad, diff_step=h)
    for k, (kern, R) in enumerate(lag.gamma):
        g = _weighted_partial(problem, lag, y, inner, "w", k)
        res = res + k_op(kern, R.dual(), g, t, quad)
    momentum = _weighted_partial(problem, lag, y, inner, "yp", 0)
    res = res - richardson_derivative(momentum.value, t, h, problem.a, problem.b)
    return res


def el_residual_l2(problem: ProblemSpec, y: FunctionHandle, **kwargs) -> float:
    r = el_residual(problem, y, **kwargs)
    return float(np.sqrt(np.mean(r**2)))


def natural_bc_residual(
    problem: ProblemSpec,
    y: FunctionHandle,
    quad: QuadratureSpec | None = None,
    inner_quad: QuadratureSpec | None = None,
    lagrangian: LagrangianSpec | None = None,
) -> np.ndarray:
    """Transversality condition at the free left endpoint, one value per component."""
    if problem.boundary_mode != "free_left":
        raise UsageError("natural boundary conditions apply to free_left problems only")
    lag = lagrangian or problem.lagrangian
    quad = quad or problem.quad
    inner = inner_quad or problem.inner
    a = np.array([problem.a])
    parts = lag.partials(compute_bundle(lag, y, a, inner))
    res = problem.weight(a)[None, :] * parts.yp
    for i, (kern, P) in enumerate(lag.beta):
        g = _weighted_partial(problem, lag, y, inner, "v", i)
        res = res + k_op(kern, P.dual(), g, a, quad)
    return res[:, 0]


def first_variation(
    problem: ProblemSpec,
    y: FunctionHandle,
    eta: FunctionHandle,
    eps: float = 1e-5,
    quad: QuadratureSpec | None = None,
    inner_quad: QuadratureSpec | None = None,
) -> tuple[float, float]:
    """Directional derivative of ``J`` along ``eta`` two ways.

    Returns ``(symmetric_difference, residual_pairing)`` where the pairing
    is ``int_a^b sum_j eta_j(t) residual_j(t) dt``.  ``eta`` must vanish at
    both endpoints.
    """
    from .operators import adaptive_steps, outer_rule

    jp = evaluate_functional(problem, y.shifted(eps, eta), quad, inner_quad)
    jm = evaluate_functional(problem, y.shifted(-eps, eta), quad, inner_quad)
    sym = (jp - jm) / (2 * eps)
    # the residual inherits the weight's (b - t)**sigma behaviour at b
    kern = problem.lagrangian.alpha_kernel
    sig_b = kern.singularity_exponent if kern.is_singular else 0.0
    x, w = outer_rule(problem.a, problem.b, nodes=16, panels=8, grading=3.0, sigma=(0.0, sig_b))
    steps = adaptive_steps(x, problem.a, problem.b, default_diff_step(problem.pset), 0.125)
    res = el_residual(problem, y, x, quad, inner_quad, diff_step=steps)
    pairing = float(np.sum(w * np.sum(eta.value(x) * res, axis=0)))
    return sym, pairing


def gradient_check(
    lag: LagrangianSpec,
    interval: tuple[float, float],
    samples: int = 4,
    rtol: float = 1e-5,
    seed: int = 0,
) -> list[int]:
    """Flat indices whose analytic partial disagrees with a central difference."""
    rng = np.random.default_rng(seed)
    a, b = interval
    nt = samples
    t = rng.uniform(a, b, nt)
    flat = np.concatenate([t[None, :], rng.normal(size=(lag.nargs - 1, nt))])
    analytic = lag.partials(lag.unflatten(flat))
    bad = []
    for index in range(2, lag.nargs + 1):
        row = index - 1
        h = 1e-6 * (1.0 + np.abs(flat[row]))
        up = flat.copy()
        dn = flat.copy()
        up[row] += h
        dn[row] -= h
        fd = (lag.evaluate(lag.unflatten(up)) - lag.evaluate(lag.unflatten(dn))) / (2 * h)
        blk, num, comp = lag.block(index)
        arr = getattr(analytic, blk)
        an = arr[comp] if blk in ("y", "yp") else arr[num, comp]
        if np.any(np.abs(fd - an) > rtol * (1.0 + np.abs(an))):
            bad.append(index)
    return bad


def _shape_findings(lag: LagrangianSpec, interval, label: str) -> list[str]:
    a, b = interval
    t = np.linspace(a, b, 3)
    nt = t.size
    bundle = Bundle(
        t,
        np.zeros((lag.N, nt)),
        np.zeros((lag.N, nt)),
        np.zeros((lag.n, lag.N, nt)),
        np.zeros((lag.m, lag.N, nt)),
    )
    expected = ((lag.N, nt), (lag.N, nt), (lag.n, lag.N, nt), (lag.m, lag.N, nt))
    try:
        got = tuple(np.shape(p) for p in lag.grad(*bundle))
        fval = np.shape(lag.F(*bundle))
    except Exception as exc:  # report, do not raise
        return [f"{label}: evaluating F or its partials failed: {exc}"]
    out = []
    if got != expected:
        out.append(f"{label}: partial blocks have shapes {got}, expected {expected}")
    if fval != (nt,):
        out.append(f"{label}: F returned shape {fval}, expected {(nt,)}")
    if lag.flatten(bundle).shape[0] != lag.nargs:
        out.append(f"{label}: flat argument count mismatch")
    return out


def ibp_routes(lag: LagrangianSpec) -> dict[str, str]:
    """Which integration-by-parts route each kernel qualifies for."""
    roster = [("alpha", lag.alpha_kernel)]
    roster += [(f"beta[{i}]", k) for i, (k, _) in enumerate(lag.beta)]
    roster += [(f"gamma[{k}]", kk) for k, (kk, _) in enumerate(lag.gamma)]
    routes = {}
    for role, kern in roster:
        if kern.square_integrable_on_square:
            routes[role] = "L2 kernel on the square"
        elif kern.l1_difference:
            routes[role] = "L1 difference kernel"
        else:
            routes[role] = "none"
    return routes


def validate_problem(problem: ProblemSpec, seed: int = 0) -> list[str]:
    """Human-readable findings; an empty list means nothing to report."""
    findings: list[str] = []
    lags = [("F", problem.lagrangian)]
    if problem.isoperimetric is not None:
        lags.append(("G", problem.isoperimetric.G))
    for role, route in ibp_routes(problem.lagrangian).items():
        if route == "none":
            findings.append(f"kernel {role}: no integration-by-parts route available")
    for kern, P in problem.lagrangian.beta + problem.lagrangian.gamma:
        if kern.kind == "hadamard" and P.a <= 0:
            findings.append("Hadamard kernel needs a > 0")
    if problem.lagrangian.alpha_kernel.kind == "hadamard" and problem.a <= 0:
        findings.append("Hadamard kernel needs a > 0")
    for label, lag in lags:
        shape = _shape_findings(lag, problem.interval, label)
        findings += shape
        if shape:
            continue
        for index in gradient_check(lag, problem.interval, seed=seed):
            findings.append(f"{label}: partial j={index} disagrees with finite difference")
    return findings
