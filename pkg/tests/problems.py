"""Problem and function builders shared by the test modules."""

import numpy as np

from gfvc.kernels import ParamSet, make_kernel
from gfvc.lagrangians import builtin_lagrangian
from gfvc.operators import FunctionHandle
from gfvc.variational import IsoperimetricConstraint, ProblemSpec

ONE = make_kernel("constant_one")
P_LEFT = ParamSet(0.0, 1.0, 1.0, 0.0)


def rl(order):
    return make_kernel("riemann_liouville", order=order)


def expk(c):
    return make_kernel("exponential", coefficient=c)


def fh(func, deriv=None, domain=(0.0, 1.0), deriv2=None):
    return FunctionHandle(func, deriv, domain, deriv2)


def monomial(n, scale=1.0):
    if n == 0:
        return fh(lambda t: scale + 0 * t, lambda t: 0 * t)
    return fh(lambda t: scale * t**n, lambda t: scale * n * t ** (n - 1))


LINE = fh(lambda t: t, lambda t: np.ones_like(t), deriv2=lambda t: np.zeros_like(t))
SQUARE = fh(lambda t: t**2, lambda t: 2 * t, deriv2=lambda t: 2 + 0 * t)
ZERO = fh(lambda t: 0 * t, lambda t: 0 * t)


def exp_line(c):
    """(e^{ct} - 1)/(e^c - 1): extremal of the exponentially weighted free particle."""
    d = np.expm1(c)
    return fh(
        lambda t: np.expm1(c * t) / d,
        lambda t: c * np.exp(c * t) / d,
        deriv2=lambda t: c * c * np.exp(c * t) / d,
    )


def dirichlet_problem(kernel=ONE, mode="fixed_both", ya=0.0, yb=1.0, **params):
    lag = builtin_lagrangian("dirichlet", alpha_kernel=kernel, **params)
    y_a = (ya,) if mode == "fixed_both" else None
    return ProblemSpec(lag, (0.0, 1.0), (yb,), y_a, boundary_mode=mode)


def damped_sho_problem(gamma=0.1, omega=2.0):
    lag = builtin_lagrangian("harmonic", alpha_kernel=expk(-gamma), stiffness=omega**2)
    return ProblemSpec(lag, (0.0, 1.0), (1.0,), (0.0,))


def damped_sho_exact(gamma=0.1, omega=2.0):
    wd = np.sqrt(omega**2 - gamma**2 / 4)
    s = np.exp(-gamma / 2) * np.sin(wd)
    return lambda t: np.exp(-gamma * t / 2) * np.sin(wd * t) / s


def isoperimetric_problem(xi=0.25, ya=0.0, yb=0.0):
    lag = builtin_lagrangian("dirichlet", alpha_kernel=ONE, weight=1.0)
    G = builtin_lagrangian("area", alpha_kernel=ONE)
    return ProblemSpec(lag, (0.0, 1.0), (yb,), (ya,), isoperimetric=IsoperimetricConstraint(G, xi))


def example2_problem(alpha=0.9, pset=P_LEFT):
    comp = rl(1.0 - alpha)
    lag = builtin_lagrangian("example2_quadratic", alpha_kernel=ONE, beta=((comp, pset),))
    return ProblemSpec(lag, (0.0, 1.0), (1.0,), (0.0,))


def sine_direction(coeffs):
    c = np.asarray(coeffs, dtype=float)
    k = np.arange(1, c.size + 1)
    return fh(
        lambda t: np.sum(c[:, None] * np.sin(np.pi * k[:, None] * t[None, :]), axis=0),
        lambda t: np.sum(c[:, None] * np.pi * k[:, None] * np.cos(np.pi * k[:, None] * t[None, :]), axis=0),
    )
