"""Invariance checks, Noether identities and constants of motion."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .kernels import Kernel, ParamSet, make_kernel
from .operators import (
    FunctionHandle,
    a_op,
    b_op,
    default_diff_step,
    k_op,
    richardson_derivative,
)
from .quadrature import QuadratureSpec
from .variational import (
    Bundle,
    ProblemSpec,
    UsageError,
    compute_bundle,
    functional_on,
    residual_grid,
)

ORDER_MODES = ("derived_one_minus_alpha", "as_printed_alpha")
NOETHER_FORMS = ("derived", "as_printed")


@dataclass(frozen=True)
class TransformationSpec:
    """Generators of ``y -> y + eps * xi(t, y)``.

    ``xi(t, y)`` receives ``t`` of shape ``(nt,)`` and ``y`` of shape
    ``(N, nt)`` and returns ``(N, nt)``.  ``dxi_dt_along(t, y, yp)`` is the
    total derivative along a trajectory; when omitted it is obtained by
    finite differences of ``t -> xi(t, y(t))``.
    """

    xi: Callable
    dxi_dt_along: Callable | None = None
    label: str = "custom"

    def along(self, y: FunctionHandle) -> FunctionHandle:
        """``t -> xi(t, y(t))`` as a handle."""
        xi, dxi = self.xi, self.dxi_dt_along

        def func(t):
            t = np.asarray(t, dtype=float)
            return np.asarray(xi(t, y.value(t)), dtype=float)

        deriv = None
        if dxi is not None:

            def deriv(t):
                t = np.asarray(t, dtype=float)
                return np.asarray(dxi(t, y.value(t), y.derivative(t)), dtype=float)

        return FunctionHandle(func, deriv, y.domain, label=f"xi[{self.label}]")


def translation(N: int, component: int = 0, size: float = 1.0) -> TransformationSpec:
    """Shift of one component by a constant."""
    e = np.zeros(N)
    e[component] = size

    def xi(t, y):
        return np.broadcast_to(e[:, None], (N, np.size(t))).copy()

    def dxi(t, y, yp):
        return np.zeros((N, np.size(t)))

    return TransformationSpec(xi, dxi, label=f"translation[{component}]")


def rotation(N: int, first: int = 0, second: int = 1) -> TransformationSpec:
    """Infinitesimal rotation in the ``(y_first, y_second)`` plane: ``xi = (y2, -y1)``."""
    if N < 2:
        raise ValueError("a planar rotation needs N >= 2")

    def xi(t, y):
        out = np.zeros_like(np.asarray(y, dtype=float))
        out[first] = y[second]
        out[second] = -y[first]
        return out

    def dxi(t, y, yp):
        out = np.zeros_like(np.asarray(yp, dtype=float))
        out[first] = yp[second]
        out[second] = -yp[first]
        return out

    return TransformationSpec(xi, dxi, label=f"rotation[{first},{second}]")


def random_subintervals(a: float, b: float, count: int = 8, seed: int = 0,
                        min_length: float = 0.05) -> list[tuple[float, float]]:
    """Seeded random ``[t_a, t_b]`` inside ``[a, b]`` of relative length at least ``min_length``."""
    rng = np.random.default_rng(seed)
    L = b - a
    out = []
    while len(out) < count:
        lo, hi = np.sort(rng.uniform(a, b, 2))
        if hi - lo >= min_length * L:
            out.append((float(lo), float(hi)))
    return out


def invariance_defects(
    problem: ProblemSpec,
    xf: TransformationSpec,
    y: FunctionHandle,
    eps_list=(1e-2, 1e-3, 1e-4),
    subintervals=None,
    seed: int = 0,
    quad: QuadratureSpec | None = None,
) -> np.ndarray:
    """``|J_sub(y + eps xi) - J_sub(y)| / |eps|``, shape ``(len(eps_list), len(subintervals))``."""
    if subintervals is None:
        subintervals = random_subintervals(problem.a, problem.b, seed=seed)
    xi = xf.along(y)
    out = np.zeros((len(eps_list), len(subintervals)))
    base = [functional_on(problem, y, ta, tb, quad) for ta, tb in subintervals]
    for i, eps in enumerate(eps_list):
        if eps == 0:
            continue
        yh = y.shifted(eps, xi)
        for s, (ta, tb) in enumerate(subintervals):
            out[i, s] = abs(functional_on(problem, yh, ta, tb, quad) - base[s]) / abs(eps)
    return out


def check_invariance(problem, xf, y, eps_list=(1e-2, 1e-3, 1e-4), subintervals=None,
                     seed: int = 0, quad=None) -> float:
    """Largest first-order invariance defect over all ``eps`` and subintervals."""
    d = invariance_defects(problem, xf, y, eps_list, subintervals, seed, quad)
    return float(d.max()) if d.size else 0.0


def _grid(problem: ProblemSpec, t_grid):
    return residual_grid(problem) if t_grid is None else np.asarray(t_grid, dtype=float).reshape(-1)


def nci_residual(problem: ProblemSpec, xf: TransformationSpec, y: FunctionHandle, t_grid=None,
                 quad: QuadratureSpec | None = None) -> np.ndarray:
    """Pointwise derivative in ``eps`` of ``F`` along the transformed trajectory."""
    lag = problem.lagrangian
    quad = quad or problem.quad
    t = _grid(problem, t_grid)
    parts = lag.partials(compute_bundle(lag, y, t, problem.inner))
    xi = xf.along(y)
    out = np.sum(parts.y * xi.value(t) + parts.yp * xi.derivative(t), axis=0)
    for i, (kern, P) in enumerate(lag.beta):
        out = out + np.sum(parts.v[i] * b_op(kern, P, xi, t, quad), axis=0)
    for k, (kern, R) in enumerate(lag.gamma):
        out = out + np.sum(parts.w[k] * k_op(kern, R, xi, t, quad), axis=0)
    return out


def _weight(weight_kernel: Kernel, b: float, t) -> np.ndarray:
    w = np.asarray(weight_kernel(b, np.asarray(t, dtype=float)), dtype=float)
    if np.any(w == 0):
        raise ZeroDivisionError("weight kernel vanishes at an evaluation point")
    return w


def d_operator(P: ParamSet, kernel_comp: Kernel, f, g, t, weight_kernel: Kernel,
               quad: QuadratureSpec | None = None, diff_step=None) -> np.ndarray:
    """``f A_{P*}[g] / k(b, t) + g B_P[f]`` with ``kernel_comp`` of complementary order."""
    t_arr = np.asarray(t, dtype=float)
    w = _weight(weight_kernel, P.b, t_arr)
    first = f(t_arr) * a_op(kernel_comp, P.dual(), g, t_arr, quad, diff_step) / w
    return first + g(t_arr) * b_op(kernel_comp, P, f, t_arr, quad)


def i_operator(P: ParamSet, kernel: Kernel, f, g, t, weight_kernel: Kernel,
               quad: QuadratureSpec | None = None) -> np.ndarray:
    """``-f K_{P*}[g] / k(b, t) + g K_P[f]``."""
    t_arr = np.asarray(t, dtype=float)
    w = _weight(weight_kernel, P.b, t_arr)
    first = -f(t_arr) * k_op(kernel, P.dual(), g, t_arr, quad) / w
    return first + g(t_arr) * k_op(kernel, P, f, t_arr, quad)


def _component(h: FunctionHandle, j: int) -> FunctionHandle:
    def func(t):
        return h.value(t)[j]

    deriv = None
    if h.has_derivative:

        def deriv(t):
            return h.derivative(t)[j]

    return FunctionHandle(func, deriv, h.domain, label=f"{h.label}[{j}]")


def noether_residual(problem: ProblemSpec, xf: TransformationSpec, y, t_grid=None,
                     quad: QuadratureSpec | None = None, diff_step=None,
                     form: str = "derived") -> np.ndarray:
    """Noether identity along a trajectory; its size is the conservation-law violation.

    ``form="derived"`` multiplies the ``B``/``K`` terms by the partials of
    ``F`` alone, which is what substituting the Euler-Lagrange system into
    the invariance condition gives.  ``form="as_printed"`` feeds the
    weighted partials ``k(b, .) dF`` to both halves of the ``D``/``I``
    operators.  The two agree whenever ``k(b, t)`` is identically one.
    """
    if form not in NOETHER_FORMS:
        raise ValueError(f"form must be one of {NOETHER_FORMS}")
    y = getattr(y, "evaluator", y)
    lag = problem.lagrangian
    quad = quad or problem.quad
    inner = problem.inner
    h = default_diff_step(problem.pset) if diff_step is None else diff_step
    t = _grid(problem, t_grid)
    wk = lag.alpha_kernel
    w = problem.weight(t)
    xi = xf.along(y)
    xiv = xi.value(t)

    def weighted(block, number):
        def func(s):
            parts = lag.partials(compute_bundle(lag, y, s, inner))
            arr = getattr(parts, block)[number]
            return problem.weight(s)[None, :] * arr

        return FunctionHandle(func, domain=problem.interval)

    parts = lag.partials(compute_bundle(lag, y, t, inner))
    out = np.zeros(t.size)
    for j in range(lag.N):
        xij = _component(xi, j)
        for i, (kern, P) in enumerate(lag.beta):
            g = _component(weighted("v", i), j)
            if form == "as_printed":
                out += d_operator(P, kern, xij, g, t, wk, quad, h)[0]
            else:
                out += xiv[j] * a_op(kern, P.dual(), g, t, quad, h)[0] / w
                out += parts.v[i, j] * b_op(kern, P, xij, t, quad)[0]
        for k, (kern, R) in enumerate(lag.gamma):
            g = _component(weighted("w", k), j)
            if form == "as_printed":
                out += i_operator(R, kern, xij, g, t, wk, quad)[0]
            else:
                out -= xiv[j] * k_op(kern, R.dual(), g, t, quad)[0] / w
                out += parts.w[k, j] * k_op(kern, R, xij, t, quad)[0]

    def momentum(s):
        s = np.asarray(s, dtype=float)
        p = lag.partials(compute_bundle(lag, y, s, inner)).yp
        return np.sum(xi.value(s) * p, axis=0)[None, :]

    out += richardson_derivative(momentum, t, h, problem.a, problem.b)[0]
    dw = richardson_derivative(lambda s: problem.weight(s)[None, :], t, h, problem.a, problem.b)[0]
    out += np.sum(xiv * parts.yp, axis=0) * dw / w
    return out


def classical_noether_quantity(problem: ProblemSpec, xf: TransformationSpec, y, t_grid=None,
                               diff_step=None) -> np.ndarray:
    """``d/dt (xi . dF/dy')`` computed directly, for comparison in the unweighted case."""
    y = getattr(y, "evaluator", y)
    lag = problem.lagrangian
    h = default_diff_step(problem.pset) if diff_step is None else diff_step
    t = _grid(problem, t_grid)
    xi = xf.along(y)

    def q(s):
        b = Bundle(s, y.value(s), y.derivative(s), np.zeros((0, lag.N, s.size)),
                   np.zeros((0, lag.N, s.size)))
        return np.sum(xi.value(s) * lag.partials(b).yp, axis=0)[None, :]

    return richardson_derivative(q, t, h, problem.a, problem.b)[0]


def default_motion_grid(problem: ProblemSpec, points: int = 19) -> np.ndarray:
    L = problem.b - problem.a
    return np.linspace(problem.a + 0.05 * L, problem.b - 0.05 * L, points)


def _check_motion_shape(problem: ProblemSpec, seed: int = 0):
    lag = problem.lagrangian
    if lag.N != 1 or lag.n != 1 or lag.m != 0:
        raise UsageError("constant of motion needs N = 1, one B argument and no K arguments")
    rng = np.random.default_rng(seed)
    nt = 5
    bundle = Bundle(
        rng.uniform(problem.a, problem.b, nt),
        rng.normal(size=(1, nt)),
        rng.normal(size=(1, nt)),
        rng.normal(size=(1, 1, nt)),
        np.zeros((0, 1, nt)),
    )
    parts = lag.partials(bundle)
    if np.any(parts.y != 0) or np.any(parts.yp != 0):
        raise UsageError("constant of motion needs F to depend only on t and the B argument")


@dataclass(frozen=True)
class MotionConstant:
    t: np.ndarray
    values: np.ndarray
    flatness: float


def flatness(values) -> float:
    values = np.asarray(values, dtype=float)
    return float(np.std(values) / max(1.0, float(np.mean(np.abs(values)))))


def constant_of_motion(problem: ProblemSpec, y, t_grid=None,
                       order_mode: str = "derived_one_minus_alpha",
                       quad: QuadratureSpec | None = None) -> MotionConstant:
    """``K_{P*}[k(b, .) dF/dv]`` along ``y`` and its flatness.

    ``derived_one_minus_alpha`` uses the complementary kernel of the ``B``
    argument; ``as_printed_alpha`` uses a kernel of the same family with
    order ``alpha``.
    """
    if order_mode not in ORDER_MODES:
        raise ValueError(f"order_mode must be one of {ORDER_MODES}")
    y = getattr(y, "evaluator", y)
    _check_motion_shape(problem)
    lag = problem.lagrangian
    quad = quad or problem.quad
    comp, P = lag.beta[0]
    if order_mode == "derived_one_minus_alpha":
        kern = comp
    else:
        if comp.kind not in ("riemann_liouville", "hadamard"):
            raise UsageError("as_printed_alpha needs a Riemann-Liouville or Hadamard kernel")
        kern = make_kernel(comp.kind, order=1.0 - comp.order)
    t = default_motion_grid(problem) if t_grid is None else np.asarray(t_grid, dtype=float).reshape(-1)

    def weighted(s):
        parts = lag.partials(compute_bundle(lag, y, s, problem.inner))
        return problem.weight(s)[None, :] * parts.v[0]

    g = FunctionHandle(weighted, domain=problem.interval)
    values = k_op(kern, P.dual(), g, t, quad)[0]
    return MotionConstant(t, values, flatness(values))


__all__ = [
    "MotionConstant",
    "TransformationSpec",
    "check_invariance",
    "classical_noether_quantity",
    "constant_of_motion",
    "d_operator",
    "flatness",
    "i_operator",
    "invariance_defects",
    "nci_residual",
    "noether_residual",
    "random_subintervals",
    "rotation",
    "translation",
]
