"""Exponentially weighted mechanics: damped motion from a weighted action.

With weight ``exp(c (b - t))`` and ``L = m |y'|^2 / 2 - V(y)`` the
Euler-Lagrange equations are ``y'' + gamma y' + grad V / m = 0`` where
``gamma = -c``.  A positive ``gamma`` (negative ``c``) damps the motion.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .kernels import make_kernel
from .operators import FunctionHandle
from .variational import LagrangianSpec, ProblemSpec, UsageError, residual_grid

POTENTIALS = ("free", "harmonic", "vertical", "custom")
SPLINE_POINTS = 129


class ResonanceError(ValueError):
    """Boundary value problem without a unique solution."""


@dataclass(frozen=True)
class OscillatorConfig:
    """Particle in three dimensions under a weighted action.

    ``potential`` is one of ``free``, ``harmonic`` (``V = k |y|^2 / 2``),
    ``vertical`` (``V = m g y_3^2``) or ``custom`` (``V`` and ``dV`` given as
    callables on ``(3, nt)`` arrays).
    """

    mass: float = 1.0
    potential: str = "harmonic"
    stiffness: float = 4.0
    gravity: float = 1.0
    coefficient: float = -0.1
    interval: tuple[float, float] = (0.0, 1.0)
    y_a: tuple[float, float, float] = (0.0, 0.0, 0.0)
    y_b: tuple[float, float, float] = (1.0, 0.0, 0.0)
    V: Callable | None = field(default=None, compare=False)
    dV: Callable | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.mass <= 0:
            raise ValueError("mass must be positive")
        if self.potential not in POTENTIALS:
            raise ValueError(f"potential must be one of {POTENTIALS}")
        if self.potential == "harmonic" and self.stiffness <= 0:
            raise ValueError("harmonic potential needs stiffness > 0")
        if self.potential == "custom" and (self.V is None or self.dV is None):
            raise ValueError("custom potential needs V and dV")
        a, b = self.interval
        if not a < b:
            raise ValueError("interval must satisfy a < b")
        for name in ("y_a", "y_b"):
            if len(getattr(self, name)) != 3:
                raise ValueError(f"{name} needs 3 components")

    @property
    def gamma(self) -> float:
        """Damping rate ``-c``."""
        return -self.coefficient

    @property
    def omega(self) -> float:
        if self.potential != "harmonic":
            raise UsageError("natural frequency is defined for the harmonic potential only")
        return float(np.sqrt(self.stiffness / self.mass))

    def potential_value(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self.potential == "free":
            return np.zeros(y.shape[1:])
        if self.potential == "harmonic":
            return 0.5 * self.stiffness * np.sum(y**2, axis=0)
        if self.potential == "vertical":
            return self.mass * self.gravity * y[2] ** 2
        return np.asarray(self.V(y), dtype=float)

    def potential_gradient(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self.potential == "free":
            return np.zeros_like(y)
        if self.potential == "harmonic":
            return self.stiffness * y
        if self.potential == "vertical":
            g = np.zeros_like(y)
            g[2] = 2.0 * self.mass * self.gravity * y[2]
            return g
        return np.asarray(self.dV(y), dtype=float)


def build_lagrangian(cfg: OscillatorConfig) -> LagrangianSpec:
    m = cfg.mass

    def F(t, y, yp, v, w):
        return 0.5 * m * np.sum(yp**2, axis=0) - cfg.potential_value(y)

    def grad(t, y, yp, v, w):
        return -cfg.potential_gradient(y), m * yp, np.zeros_like(v), np.zeros_like(w)

    params = (("mass", m), ("potential", cfg.potential))
    return LagrangianSpec(
        F=F,
        grad=grad,
        N=3,
        alpha_kernel=make_kernel("exponential", coefficient=cfg.coefficient),
        name=f"bck_{cfg.potential}",
        params=params,
    )


def build_bck_problem(cfg: OscillatorConfig, **problem_kwargs) -> ProblemSpec:
    """Fixed-endpoint problem with weight ``exp(c (b - t))`` and the configured potential."""
    return ProblemSpec(
        build_lagrangian(cfg),
        cfg.interval,
        y_b=cfg.y_b,
        y_a=cfg.y_a,
        boundary_mode="fixed_both",
        **problem_kwargs,
    )


def second_derivative(y: FunctionHandle, t) -> np.ndarray:
    """Analytic when available, otherwise a cubic spline through 129 samples."""
    t = np.asarray(t, dtype=float)
    d2 = y.second_derivative(t)
    if d2 is not None:
        return d2
    a, b = y.domain
    s = np.linspace(a, b, SPLINE_POINTS)
    return CubicSpline(s, y.value(s), axis=1)(t, 2)


def falva_residual(cfg: OscillatorConfig, y: FunctionHandle, t_grid=None) -> np.ndarray:
    """``y'' + gamma y' + grad V / m`` on the grid, shape ``(3, nt)``."""
    t = _grid(cfg, t_grid)
    return (
        second_derivative(y, t)
        + cfg.gamma * y.derivative(t)
        + cfg.potential_gradient(y.value(t)) / cfg.mass
    )


def _grid(cfg: OscillatorConfig, t_grid):
    if t_grid is not None:
        return np.asarray(t_grid, dtype=float).reshape(-1)
    return residual_grid(build_bck_problem(cfg))


def _damped_component(gamma, omega, a, L, ya, yb):
    """Closed form of ``y'' + gamma y' + omega^2 y = 0`` with ``y(a) = ya``, ``y(a + L) = yb``."""
    disc = omega**2 - 0.25 * gamma**2
    if disc <= 0:
        raise ValueError("closed form implemented for the underdamped regime omega^2 > gamma^2 / 4")
    wd = np.sqrt(disc)
    s = np.sin(wd * L)
    if abs(s) < 1e-10:
        raise ResonanceError(
            f"sin(omega_d (b - a)) = {s:.3e}: omega_d (b - a) is a multiple of pi, "
            "the boundary value problem is degenerate"
        )
    A = ya
    B = (yb * np.exp(0.5 * gamma * L) - ya * np.cos(wd * L)) / s
    r = -0.5 * gamma

    def parts(t):
        u = np.asarray(t, dtype=float) - a
        e = np.exp(r * u)
        c, sn = np.cos(wd * u), np.sin(wd * u)
        f = A * c + B * sn
        fp = -A * wd * sn + B * wd * c
        fpp = -wd**2 * f
        return e * f, e * (r * f + fp), e * (r * r * f + 2 * r * fp + fpp)

    return parts


def _free_component(gamma, a, L, ya, yb):
    """Closed form of ``y'' + gamma y' = 0`` with the same boundary data."""
    c = -gamma

    def parts(t):
        u = np.asarray(t, dtype=float) - a
        if abs(c) < 1e-12:
            s = u / L
            return ya + (yb - ya) * s, np.full_like(u, (yb - ya) / L), np.zeros_like(u)
        den = np.expm1(c * L)
        e = np.exp(c * u)
        return (
            ya + (yb - ya) * np.expm1(c * u) / den,
            (yb - ya) * c * e / den,
            (yb - ya) * c * c * e / den,
        )

    return parts


def analytic_damped_bvp(cfg: OscillatorConfig) -> FunctionHandle:
    """Exact trajectory for the free or harmonic potential, with two derivatives."""
    a, b = cfg.interval
    L = b - a
    comps = []
    for ya, yb in zip(cfg.y_a, cfg.y_b):
        if cfg.potential == "harmonic":
            comps.append(_damped_component(cfg.gamma, cfg.omega, a, L, ya, yb))
        elif cfg.potential == "free":
            comps.append(_free_component(cfg.gamma, a, L, ya, yb))
        else:
            raise UsageError("closed form available for free and harmonic potentials only")

    def pick(k):
        return lambda t: np.stack([c(t)[k] for c in comps])

    return FunctionHandle(pick(0), pick(1), cfg.interval, pick(2), label="analytic")


def momentum_law_residual(cfg: OscillatorConfig, y: FunctionHandle, t_grid=None) -> np.ndarray:
    """``d/dt (m y1') - c m y1'``, zero along extremals when ``V`` ignores ``y1``."""
    if cfg.potential == "harmonic":
        raise UsageError("harmonic potential depends on y1; translation symmetry is broken")
    if cfg.potential == "custom":
        raise UsageError("cannot certify that a custom potential is independent of y1")
    t = _grid(cfg, t_grid)
    m = cfg.mass
    return m * second_derivative(y, t)[0] - cfg.coefficient * m * y.derivative(t)[0]


def rotation_law_residual(cfg: OscillatorConfig, y: FunctionHandle, t_grid=None) -> np.ndarray:
    """``d/dt (m (y1' y2 - y1 y2')) - c m (y1' y2 - y1 y2')``."""
    if cfg.potential == "custom":
        raise UsageError("cannot certify rotational symmetry of a custom potential")
    t = _grid(cfg, t_grid)
    m = cfg.mass
    yv, yp, ypp = y.value(t), y.derivative(t), second_derivative(y, t)
    ang = yp[0] * yv[1] - yv[0] * yp[1]
    dang = ypp[0] * yv[1] - yv[0] * ypp[1]
    return m * dang - cfg.coefficient * m * ang


@dataclass
class DemoResult:
    t: np.ndarray
    y: np.ndarray
    analytic: np.ndarray
    el_residual: np.ndarray
    momentum_residual: np.ndarray
    rotation_residual: np.ndarray
    linf_error: float
    falva_linf: float
    converged: bool


def run_demo(gamma: float = 0.1, omega: float = 2.0, basis_size: int = 20, points: int = 32,
             mass: float = 1.0, y_a=(0.0, 0.0, 0.0), y_b=(1.0, 0.0, 0.0)) -> DemoResult:
    """Solve the damped harmonic oscillator and compare with the closed form.

    The momentum and rotation columns evaluate the respective conservation
    laws along the same trajectory.  The harmonic force breaks translation
    symmetry, so the momentum column is not expected to vanish; the
    rotation law holds for any central potential.
    """
    from .ritz import solve_ritz

    cfg = OscillatorConfig(mass=mass, potential="harmonic", stiffness=mass * omega**2,
                           coefficient=-gamma, y_a=tuple(y_a), y_b=tuple(y_b))
    problem = build_bck_problem(cfg)
    sol = solve_ritz(problem, basis_size, diagnostics=False)
    t = residual_grid(problem, points)
    ys = sol.evaluator
    exact = analytic_damped_bvp(cfg)
    yv, ev = ys.value(t), exact.value(t)
    fine = np.linspace(cfg.interval[0], cfg.interval[1], 1001)
    linf = float(np.max(np.abs(ys.value(fine) - exact.value(fine))))
    el = falva_residual(cfg, ys, t)
    m = cfg.mass
    mom = m * second_derivative(ys, t)[0] - cfg.coefficient * m * ys.derivative(t)[0]
    rot = rotation_law_residual(cfg, ys, t)
    return DemoResult(t, yv, ev, el, mom, rot, linf, float(np.max(np.abs(el))),
                      sol.diagnostics.converged)


__all__ = [
    "DemoResult",
    "OscillatorConfig",
    "ResonanceError",
    "analytic_damped_bvp",
    "build_bck_problem",
    "build_lagrangian",
    "falva_residual",
    "momentum_law_residual",
    "rotation_law_residual",
    "run_demo",
    "second_derivative",
]
