"""Parameter sets and the kernel catalog.

A kernel ``k(x, t)`` is always evaluated with its first argument on the
far side of the singular diagonal, i.e. ``x > t``.  The left branch of a
generalized fractional integral uses ``k(x, t)`` for ``t < x``; the right
branch uses ``k(t, x)`` for ``t > x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable

import numpy as np
from scipy import special

KERNEL_KINDS = (
    "riemann_liouville",
    "hadamard",
    "variable_order",
    "exponential",
    "constant_one",
)


class KernelError(ValueError):
    """Raised for inadmissible kernel parameters."""


def gamma(x):
    """Euler gamma function, scalar or elementwise."""
    if np.ndim(x) == 0:
        return math.gamma(float(x))
    return special.gamma(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class ParamSet:
    """The p-set ``<a, b, p, q>``.

    ``p`` weights the left integral over ``[a, x]`` and ``q`` the right
    integral over ``[x, b]``.  The evaluation point ``x`` is not stored.
    """

    a: float
    b: float
    p: float = 1.0
    q: float = 0.0

    def __post_init__(self):
        if not (self.a < self.b):
            raise ValueError(f"ParamSet requires a < b, got a={self.a}, b={self.b}")

    def dual(self) -> ParamSet:
        return replace(self, p=self.q, q=self.p)

    @property
    def length(self) -> float:
        return self.b - self.a

    def to_dict(self) -> dict[str, float]:
        return {"a": self.a, "b": self.b, "p": self.p, "q": self.q}


def dual_pset(P: ParamSet) -> ParamSet:
    """Return ``<a, b, q, p>``."""
    return P.dual()


@dataclass(frozen=True)
class Kernel:
    """An evaluable kernel with the metadata quadrature needs.

    ``singularity_exponent`` is the ``sigma`` in ``k(x, t) ~ C (x - t)**sigma``
    as ``t -> x``.  ``smooth_part(x, t)`` returns ``k(x, t) * (x - t)**(-sigma)``
    which stays bounded on the diagonal; quadrature integrates the
    ``(x - t)**sigma`` factor exactly.
    """

    kind: str
    order: float | None
    func: Callable = field(compare=False, repr=False)
    singularity_exponent: float = 0.0
    is_difference: bool = False
    square_integrable_on_square: bool = False
    l1_difference: bool = False
    smooth: Callable | None = field(default=None, compare=False, repr=False)
    graded_only: bool = False
    params: tuple = ()

    def __call__(self, x, t):
        return self.func(np.asarray(x, dtype=float), np.asarray(t, dtype=float))

    eval = __call__

    def smooth_part(self, x, t):
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        if self.smooth is not None:
            return self.smooth(x, t)
        if self.singularity_exponent == 0.0 or self.graded_only:
            return self.func(x, t)
        return self.func(x, t) * (x - t) ** (-self.singularity_exponent)

    @property
    def is_singular(self) -> bool:
        return self.singularity_exponent < 0.0

    @property
    def has_ibp_route(self) -> bool:
        return self.square_integrable_on_square or self.l1_difference

    def config(self) -> dict[str, Any]:
        """Serializable description; variable-order kernels are not serializable."""
        if self.kind == "variable_order":
            raise KernelError("variable-order kernels cannot be written to a config")
        out: dict[str, Any] = {"kind": self.kind}
        out.update(dict(self.params))
        return out


def _check_order(order, kind):
    if order is None or not (0.0 < order < 1.0):
        raise KernelError(f"{kind} kernel requires order in (0, 1), got {order!r}")
    return float(order)


def _riemann_liouville(order: float) -> Kernel:
    inv_g = 1.0 / gamma(order)
    sigma = order - 1.0

    def func(x, t):
        return inv_g * (x - t) ** sigma

    def smooth(x, t):
        return np.full(np.broadcast(x, t).shape, inv_g)

    return Kernel(
        kind="riemann_liouville",
        order=order,
        func=func,
        singularity_exponent=sigma,
        is_difference=True,
        square_integrable_on_square=order > 0.5,
        l1_difference=True,
        smooth=smooth,
        params=(("order", order),),
    )


def _hadamard(order: float) -> Kernel:
    inv_g = 1.0 / gamma(order)
    sigma = order - 1.0

    def func(x, t):
        return inv_g * np.log(x / t) ** sigma / t

    def smooth(x, t):
        d = x - t
        # log(x/t)/(x-t) -> 1/t on the diagonal
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.where(d > 0, np.log1p(d / t) / np.where(d > 0, d, 1.0), 1.0 / t)
        return inv_g * ratio ** sigma / t

    return Kernel(
        kind="hadamard",
        order=order,
        func=func,
        singularity_exponent=sigma,
        is_difference=False,
        square_integrable_on_square=order > 0.5,
        l1_difference=False,
        smooth=smooth,
        params=(("order", order),),
    )


def _exponential(coefficient: float) -> Kernel:
    c = float(coefficient)

    def func(x, t):
        return np.exp(c * (x - t))

    return Kernel(
        kind="exponential",
        order=c,
        func=func,
        singularity_exponent=0.0,
        is_difference=True,
        square_integrable_on_square=True,
        l1_difference=True,
        params=(("coefficient", c),),
    )


def _constant_one() -> Kernel:
    def func(x, t):
        return np.ones(np.broadcast(x, t).shape)

    return Kernel(
        kind="constant_one",
        order=None,
        func=func,
        singularity_exponent=0.0,
        is_difference=True,
        square_integrable_on_square=True,
        l1_difference=True,
    )


def _variable_order(order_function: Callable, domain, samples: int = 65) -> Kernel:
    a, b = domain
    grid = np.linspace(a, b, samples)
    T, S = np.meshgrid(grid, grid, indexing="ij")
    values = np.asarray(order_function(T, S), dtype=float)
    if not np.all(np.isfinite(values)) or values.min() <= 0.0 or values.max() >= 1.0:
        raise KernelError("order function must take values in (0, 1) on the domain")
    sigma_min = float(values.min()) - 1.0

    def func(x, t):
        alpha = np.asarray(order_function(x, t), dtype=float)
        return (x - t) ** (alpha - 1.0) / special.gamma(alpha)

    return Kernel(
        kind="variable_order",
        order=float(values.min()),
        func=func,
        singularity_exponent=sigma_min,
        is_difference=False,
        square_integrable_on_square=sigma_min > -0.5,
        l1_difference=False,
        graded_only=True,
    )


def make_kernel(
    kind: str,
    order: float | None = None,
    coefficient: float | None = None,
    order_function: Callable | None = None,
    domain: tuple[float, float] = (0.0, 1.0),
) -> Kernel:
    """Build a catalog kernel.

    Parameters
    ----------
    kind
        One of ``riemann_liouville``, ``hadamard``, ``variable_order``,
        ``exponential`` or ``constant_one``.
    order
        Fractional order in (0, 1) for the singular kinds.
    coefficient
        Exponent ``c`` of ``exp(c (x - t))``; any real value.
    order_function
        ``alpha(t, tau)`` for variable-order kernels, vectorized.
    domain
        Square on which the order function is sampled to find the worst
        singularity exponent.

    Examples
    --------
    >>> round(float(make_kernel("riemann_liouville", order=0.5)(1.0, 0.75)), 7)
    1.1283792
    """
    if kind == "riemann_liouville":
        return _riemann_liouville(_check_order(order, kind))
    if kind == "hadamard":
        return _hadamard(_check_order(order, kind))
    if kind == "exponential":
        if coefficient is None:
            raise KernelError("exponential kernel requires a coefficient")
        return _exponential(coefficient)
    if kind == "constant_one":
        return _constant_one()
    if kind == "variable_order":
        if order_function is None:
            raise KernelError("variable_order kernel requires an order_function")
        return _variable_order(order_function, domain)
    raise KernelError(f"unknown kernel kind {kind!r}; expected one of {KERNEL_KINDS}")


def kernel_from_config(cfg: dict[str, Any]) -> Kernel:
    return make_kernel(
        cfg["kind"], order=cfg.get("order"), coefficient=cfg.get("coefficient")
    )
