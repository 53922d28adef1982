"""Generalized fractional integral and derivatives on function handles.

``k_op`` evaluates

    K_P[f](x) = p * int_a^x k(x, t) f(t) dt + q * int_x^b k(t, x) f(t) dt,

``b_op`` is ``K_P`` applied to ``f'`` (generalized Caputo) and ``a_op`` is
the derivative of ``x -> K_P[f](x)`` (generalized Riemann-Liouville).  For
the derivative operators the kernel passed in is the complementary one,
i.e. the kernel of order ``1 - alpha``.

All operators accept a scalar ``x`` (result shape ``(N,)``) or an array of
points (result shape ``(N, len(x))``).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special

from .kernels import Kernel, KernelError, ParamSet
from .quadrature import QuadratureSpec, breakpoints, singular_rule

logger = logging.getLogger(__name__)

DEFAULT_QUAD = QuadratureSpec()
_EDGE_TOL = 1e-12


class DomainError(ValueError):
    """Evaluation point outside the admissible part of ``[a, b]``."""


class NonFiniteIntegrandError(ArithmeticError):
    """An integrand sample was NaN or infinite."""

    def __init__(self, node: float, where: str = "integrand"):
        self.node = float(node)
        super().__init__(f"non-finite {where} value at t = {self.node!r}")


def _as_components(v, n: int) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim == 0:
        return np.full((1, n), float(v))
    if v.ndim == 1:
        if v.shape[0] == n:
            return v[None, :]
        if n == 1:
            return v[:, None]
        raise ValueError(f"function returned shape {v.shape} for {n} points")
    if v.ndim == 2 and v.shape[1] in (n, 1):
        return np.broadcast_to(v, (v.shape[0], n))
    raise ValueError(f"function returned shape {v.shape} for {n} points")


@dataclass(frozen=True)
class FunctionHandle:
    """A scalar or vector function on ``[a, b]``.

    ``func`` takes a 1-D array of times and returns either an array of the
    same length (scalar function) or an ``(N, len(t))`` array.  ``deriv``
    and ``deriv2`` follow the same convention.  Without ``deriv`` a
    fourth-order finite difference with step ``(b - a) * 1e-4`` is used.
    """

    func: Callable
    deriv: Callable | None = None
    domain: tuple[float, float] = (0.0, 1.0)
    deriv2: Callable | None = None
    label: str = field(default="", compare=False)

    def _call(self, fn, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        flat = t.reshape(-1)
        out = _as_components(fn(flat), flat.size)
        return out.reshape((out.shape[0],) + t.shape)

    def value(self, t) -> np.ndarray:
        return self._call(self.func, t)

    __call__ = value

    @property
    def has_derivative(self) -> bool:
        return self.deriv is not None

    def derivative(self, t) -> np.ndarray:
        if self.deriv is not None:
            return self._call(self.deriv, t)
        return self._fd_derivative(t)

    def second_derivative(self, t) -> np.ndarray | None:
        if self.deriv2 is None:
            return None
        return self._call(self.deriv2, t)

    @property
    def ncomp(self) -> int:
        a, b = self.domain
        return self.value(np.array([0.5 * (a + b)])).shape[0]

    def _fd_derivative(self, t) -> np.ndarray:
        a, b = self.domain
        h = (b - a) * 1e-4
        t = np.asarray(t, dtype=float)
        flat = t.reshape(-1)
        fwd = flat - 2 * h < a - _EDGE_TOL
        bwd = (flat + 2 * h > b + _EDGE_TOL) & ~fwd
        # one stencil matrix: offsets and coefficients per point
        offs = np.tile(np.array([-2.0, -1.0, 1.0, 2.0, 0.0]), (flat.size, 1))
        coef = np.tile(np.array([1.0, -8.0, 8.0, -1.0, 0.0]), (flat.size, 1))
        offs[fwd] = [0.0, 1.0, 2.0, 3.0, 4.0]
        coef[fwd] = [-25.0, 48.0, -36.0, 16.0, -3.0]
        offs[bwd] = [0.0, -1.0, -2.0, -3.0, -4.0]
        coef[bwd] = [25.0, -48.0, 36.0, -16.0, 3.0]
        pts = flat[:, None] + h * offs
        vals = self.value(pts.reshape(-1)).reshape(-1, flat.size, 5)
        d = np.einsum("npk,pk->np", vals, coef) / (12.0 * h)
        return d.reshape((d.shape[0],) + t.shape)

    def derivative_handle(self) -> FunctionHandle:
        return FunctionHandle(self.derivative, self.deriv2, self.domain, label=f"d({self.label})")

    def shifted(self, eps: float, other: FunctionHandle) -> FunctionHandle:
        """``self + eps * other`` with derivatives combined likewise."""

        def func(t):
            return self.value(t) + eps * other.value(t)

        def deriv(t):
            return self.derivative(t) + eps * other.derivative(t)

        return FunctionHandle(func, deriv, self.domain)


def as_handle(f, domain=(0.0, 1.0)) -> FunctionHandle:
    if isinstance(f, FunctionHandle):
        return f
    if callable(f):
        return FunctionHandle(f, domain=domain)
    value = float(f)
    return FunctionHandle(lambda t: np.full_like(t, value), lambda t: np.zeros_like(t), domain)


def _points(P: ParamSet, x):
    x_arr = np.asarray(x, dtype=float)
    scalar = x_arr.ndim == 0
    xs = np.atleast_1d(x_arr).reshape(-1)
    tol = _EDGE_TOL * max(1.0, abs(P.a), abs(P.b))
    bad = (xs < P.a - tol) | (xs > P.b + tol) | ~np.isfinite(xs)
    if bad.any():
        raise DomainError(
            f"evaluation point x = {xs[bad][0]!r} outside [{P.a}, {P.b}]"
        )
    return np.clip(xs, P.a, P.b), scalar


def branch_nodes(kernel: Kernel, P: ParamSet, xs: np.ndarray, quad: QuadratureSpec):
    """Quadrature nodes ``(nx, nq)`` and kernel-weighted weights for ``K_P`` at ``xs``."""
    if kernel.kind == "hadamard" and P.a <= 0:
        raise KernelError("Hadamard kernels require a > 0")
    sigma = kernel.singularity_exponent
    u, w = singular_rule(quad, sigma, kernel.graded_only)
    power = 1.0 if kernel.graded_only else sigma + 1.0
    nodes, weights = [], []
    for weight, length, sign in ((P.p, xs - P.a, -1.0), (P.q, P.b - xs, 1.0)):
        if weight == 0.0:
            continue
        live = length > 0.0
        L = np.where(live, length, 1.0)
        t = xs[:, None] + sign * L[:, None] * u[None, :]
        if sign < 0:
            kv = kernel.smooth_part(xs[:, None], t)
        else:
            kv = kernel.smooth_part(t, xs[:, None])
        W = weight * (L**power)[:, None] * w[None, :] * kv
        W = np.where(live[:, None], W, 0.0)
        t = np.where(live[:, None], t, xs[:, None])
        nodes.append(t)
        weights.append(W)
    if not nodes:
        return np.zeros((xs.size, 0)), np.zeros((xs.size, 0))
    return np.concatenate(nodes, axis=1), np.concatenate(weights, axis=1)


def _integrate(f: FunctionHandle, T: np.ndarray, W: np.ndarray, where: str) -> np.ndarray:
    if T.shape[1] == 0:
        return np.zeros((f.ncomp, T.shape[0]))
    vals = f.value(T)
    if not np.all(np.isfinite(W)):
        i = np.argwhere(~np.isfinite(W))[0]
        raise NonFiniteIntegrandError(T[tuple(i)], "kernel weight")
    live = W != 0.0
    bad = ~np.isfinite(vals) & live[None]
    if bad.any():
        i = np.argwhere(bad)[0]
        raise NonFiniteIntegrandError(T[i[1], i[2]], where)
    vals = np.where(live[None], vals, 0.0)
    return np.einsum("nxq,xq->nx", vals, W)


def k_op(kernel: Kernel, P: ParamSet, f, x, quad: QuadratureSpec | None = None) -> np.ndarray:
    """Generalized fractional integral ``K_P[f](x)``.

    Examples
    --------
    >>> from gfvc.kernels import make_kernel
    >>> k = make_kernel("riemann_liouville", order=0.5)
    >>> one = FunctionHandle(lambda t: 1.0 + 0 * t)
    >>> round(float(k_op(k, ParamSet(0, 1, 1, 0), one, 0.25)[0]), 7)
    0.5641896
    """
    quad = quad or DEFAULT_QUAD
    f = as_handle(f, (P.a, P.b))
    xs, scalar = _points(P, x)
    T, W = branch_nodes(kernel, P, xs, quad)
    out = _integrate(f, T, W, "integrand")
    return out[:, 0] if scalar else out


def b_op(kernel_comp: Kernel, P: ParamSet, f, x, quad: QuadratureSpec | None = None) -> np.ndarray:
    """Generalized Caputo derivative ``K_P^{1-beta}[f'](x)``."""
    f = as_handle(f, (P.a, P.b))
    if not f.has_derivative:
        logger.debug("b_op: finite-difference derivative fallback for %s", f.label or "f")
    return k_op(kernel_comp, P, f.derivative_handle(), x, quad)


def default_diff_step(P: ParamSet) -> float:
    return (P.b - P.a) * 1e-3


def richardson_derivative(g: Callable, x, h, lower: float, upper: float) -> np.ndarray:
    """Central difference with one Richardson step over ``{h, h/2}``.

    ``g`` maps an array of points to ``(N, len(points))``.  ``h`` may be a
    scalar or an array matching ``x``.
    """
    x_arr = np.asarray(x, dtype=float)
    scalar = x_arr.ndim == 0
    xs = np.atleast_1d(x_arr).reshape(-1)
    hs = np.broadcast_to(np.asarray(h, dtype=float), xs.shape)
    tol = _EDGE_TOL * max(1.0, abs(lower), abs(upper))
    bad = (xs - hs < lower - tol) | (xs + hs > upper + tol) | (hs <= 0)
    if bad.any():
        x0, h0 = xs[bad][0], hs[bad][0]
        raise DomainError(
            f"x = {x0!r} is within the stencil width h = {h0!r} of an endpoint of "
            f"[{lower}, {upper}]; use an interior x or a smaller diff_step"
        )
    stencil = np.concatenate([xs - hs, xs + hs, xs - hs / 2, xs + hs / 2])
    vals = g(np.clip(stencil, lower, upper))
    m, p, mh, ph = np.split(vals, 4, axis=-1)
    d1 = (p - m) / (2 * hs)
    d2 = (ph - mh) / hs
    d = (4.0 * d2 - d1) / 3.0
    return d[:, 0] if scalar else d


def a_op(
    kernel_comp: Kernel,
    P: ParamSet,
    f,
    x,
    quad: QuadratureSpec | None = None,
    diff_step=None,
) -> np.ndarray:
    """Generalized Riemann-Liouville derivative ``d/dx K_P^{1-alpha}[f](x)``."""
    f = as_handle(f, (P.a, P.b))
    h = default_diff_step(P) if diff_step is None else diff_step

    def g(pts):
        return k_op(kernel_comp, P, f, pts, quad)

    return richardson_derivative(g, x, h, P.a, P.b)


def adaptive_steps(x, a: float, b: float, h0: float, fraction: float = 0.125) -> np.ndarray:
    """Per-point difference steps that keep the stencil inside ``[a, b]``."""
    x = np.asarray(x, dtype=float)
    dist = np.minimum(x - a, b - x)
    return np.minimum(h0, fraction * dist)


# --- outer rules -----------------------------------------------------------


def outer_rule(a: float, b: float, nodes: int = 20, panels: int = 8, grading: float = 4.0,
               sigma: tuple[float, float] = (0.0, 0.0)):
    """Composite rule on ``[a, b]`` graded toward both ends.

    ``sigma`` gives expected endpoint exponents; a nonzero entry switches
    the end panel to Gauss-Jacobi with that weight, the remaining
    integrand factor being evaluated as ``g(x) * d**(-sigma)``.  Returns
    ``(x, w)`` where ``w`` already includes that correction, so the rule
    is applied as ``sum(w * g(x))``.
    """
    edges = a + (b - a) * breakpoints(panels, grading)
    xg, wg = special.roots_legendre(nodes)
    xs, ws = [], []
    for i in range(panels):
        lo, hi = edges[i], edges[i + 1]
        half = 0.5 * (hi - lo)
        if i == 0 and sigma[0] != 0.0:
            xj, wj = special.roots_jacobi(nodes, 0.0, sigma[0])
            d = half * (xj + 1.0)
            xs.append(lo + d)
            ws.append(half ** (sigma[0] + 1.0) * wj * d ** (-sigma[0]))
        elif i == panels - 1 and sigma[1] != 0.0:
            xj, wj = special.roots_jacobi(nodes, sigma[1], 0.0)
            d = half * (1.0 - xj)
            xs.append(hi - d)
            ws.append(half ** (sigma[1] + 1.0) * wj * d ** (-sigma[1]))
        else:
            xs.append(lo + half * (xg + 1.0))
            ws.append(half * wg)
    return np.concatenate(xs), np.concatenate(ws)


@dataclass(frozen=True)
class IBPCheck:
    lhs: float
    rhs: float
    abs_residual: float


def _scalar(f: FunctionHandle, x):
    v = f.value(x)
    if v.shape[0] != 1:
        raise ValueError("integration-by-parts checks need scalar functions")
    return v[0]


def check_ibp_k(kernel: Kernel, P: ParamSet, f, g, quad: QuadratureSpec | None = None) -> IBPCheck:
    """Compare ``int g K_P[f]`` with ``int f K_{P*}[g]`` on ``[a, b]``."""
    f = as_handle(f, (P.a, P.b))
    g = as_handle(g, (P.a, P.b))
    x1, w1 = outer_rule(P.a, P.b, nodes=20, panels=10, grading=4.0)
    x2, w2 = outer_rule(P.a, P.b, nodes=24, panels=9, grading=5.0)
    lhs = float(np.sum(w1 * _scalar(g, x1) * k_op(kernel, P, f, x1, quad)[0]))
    rhs = float(np.sum(w2 * _scalar(f, x2) * k_op(kernel, P.dual(), g, x2, quad)[0]))
    return IBPCheck(lhs, rhs, abs(lhs - rhs))


def check_ibp_b(
    kernel_comp: Kernel,
    P: ParamSet,
    f,
    g,
    quad: QuadratureSpec | None = None,
    diff_step: float | None = None,
) -> IBPCheck:
    """Compare ``int g B_P[f]`` with ``[f K_{P*}[g]]_a^b - int f A_{P*}[g]``.

    The derivative inside ``A_{P*}`` uses steps shrunk near the endpoints so
    the outer rule may approach them; the end panels of the outer rule
    carry the kernel's endpoint exponent.
    """
    f = as_handle(f, (P.a, P.b))
    g = as_handle(g, (P.a, P.b))
    Pd = P.dual()
    h0 = default_diff_step(P) if diff_step is None else diff_step
    sig = kernel_comp.singularity_exponent if kernel_comp.is_difference else 0.0
    x1, w1 = outer_rule(P.a, P.b, nodes=20, panels=10, grading=4.0)
    lhs = float(np.sum(w1 * _scalar(g, x1) * b_op(kernel_comp, P, f, x1, quad)[0]))

    ends = np.array([P.a, P.b])
    kg = k_op(kernel_comp, Pd, g, ends, quad)[0]
    fe = _scalar(f, ends)
    boundary = float(fe[1] * kg[1] - fe[0] * kg[0])
    x2, w2 = outer_rule(P.a, P.b, nodes=30, panels=12, grading=5.0, sigma=(sig, sig))
    steps = adaptive_steps(x2, P.a, P.b, h0, fraction=0.02)
    av = a_op(kernel_comp, Pd, g, x2, quad, diff_step=steps)[0]
    rhs = boundary - float(np.sum(w2 * _scalar(f, x2) * av))
    return IBPCheck(lhs, rhs, abs(lhs - rhs))
