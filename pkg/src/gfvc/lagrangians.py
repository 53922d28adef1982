"""Builtin integrands addressable by name from config files.

Every builtin is a quadratic-plus-linear form

    F = 1/2 (c_yp |y'|^2 + c_y |y|^2 + c_v |v|^2 + c_w |w|^2) + s * sum(y) + V(y)

with closed-form partials; the named entries fix the coefficients.
"""

from __future__ import annotations

from typing import Any, Callable

import numpy as np

from .kernels import Kernel, ParamSet, make_kernel
from .variational import LagrangianSpec


def _quadratic(cyp=0.0, cy=0.0, cv=0.0, cw=0.0, source=0.0, vertical=0.0):
    """``vertical`` adds ``-vertical * y_3**2`` (needs N >= 3)."""

    def F(t, y, yp, v, w):
        out = 0.5 * (
            cyp * np.sum(yp**2, axis=0)
            + cy * np.sum(y**2, axis=0)
            + cv * np.sum(v**2, axis=(0, 1))
            + cw * np.sum(w**2, axis=(0, 1))
        )
        out = out + source * np.sum(y, axis=0)
        if vertical:
            out = out - vertical * y[2] ** 2
        return out

    def grad(t, y, yp, v, w):
        gy = cy * y + source
        if vertical:
            gy = np.array(gy, copy=True)
            gy[2] = gy[2] - 2.0 * vertical * y[2]
        return gy, cyp * yp, cv * v, cw * w

    return F, grad


def _dirichlet(weight=0.5):
    return _quadratic(cyp=2.0 * weight)


def _free_particle(mass=1.0):
    return _quadratic(cyp=mass)


def _harmonic(mass=1.0, stiffness=1.0):
    return _quadratic(cyp=mass, cy=-stiffness)


def _vertical(mass=1.0, gravity=1.0):
    return _quadratic(cyp=mass, vertical=mass * gravity)


def _example2_quadratic(scale=1.0):
    return _quadratic(cv=scale)


def _half_square(scale=1.0):
    return _quadratic(cy=scale)


def _area(scale=1.0):
    return _quadratic(source=scale)


def _quadratic_form(yp=0.0, y=0.0, v=0.0, w=0.0, source=0.0):
    return _quadratic(cyp=yp, cy=y, cv=v, cw=w, source=source)


BUILTINS: dict[str, Callable[..., tuple[Callable, Callable]]] = {
    "dirichlet": _dirichlet,
    "free_particle": _free_particle,
    "harmonic": _harmonic,
    "vertical": _vertical,
    "example2_quadratic": _example2_quadratic,
    "half_square": _half_square,
    "area": _area,
    "quadratic": _quadratic_form,
}


def builtin_lagrangian(
    name: str,
    N: int = 1,
    alpha_kernel: Kernel | None = None,
    beta: tuple[tuple[Kernel, ParamSet], ...] = (),
    gamma: tuple[tuple[Kernel, ParamSet], ...] = (),
    **params: Any,
) -> LagrangianSpec:
    """Construct a registered integrand (unweighted unless ``alpha_kernel`` is given).

    >>> from gfvc.kernels import make_kernel
    >>> lag = builtin_lagrangian("harmonic", alpha_kernel=make_kernel("constant_one"), stiffness=4.0)
    >>> lag.name, lag.N
    ('harmonic', 1)
    """
    try:
        builder = BUILTINS[name]
    except KeyError:
        raise KeyError(f"unknown builtin Lagrangian {name!r}; known: {sorted(BUILTINS)}") from None
    if name == "vertical" and N < 3:
        raise ValueError("the vertical potential acts on y_3 and needs N >= 3")
    F, grad = builder(**params)
    return LagrangianSpec(
        F=F,
        grad=grad,
        N=N,
        alpha_kernel=alpha_kernel or make_kernel("constant_one"),
        beta=tuple(beta),
        gamma=tuple(gamma),
        name=name,
        params=tuple(sorted(params.items())),
    )
