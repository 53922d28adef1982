"""Strict JSON run configurations and conversion to library objects.

Unknown keys anywhere in a document are rejected.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .kernels import Kernel, ParamSet, make_kernel
from .lagrangians import BUILTINS, builtin_lagrangian
from .operators import FunctionHandle
from .quadrature import QuadratureSpec
from .ritz import SolverOptions
from .variational import IsoperimetricConstraint, LagrangianSpec, ProblemSpec


class ConfigError(ValueError):
    """Malformed configuration; the message names the line or field."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class KernelConfig(_Strict):
    kind: Literal["riemann_liouville", "hadamard", "exponential", "constant_one"]
    order: Optional[float] = None
    coefficient: Optional[float] = None

    def build(self) -> Kernel:
        return make_kernel(self.kind, order=self.order, coefficient=self.coefficient)


class PSetConfig(_Strict):
    a: float = 0.0
    b: float = 1.0
    p: float = 1.0
    q: float = 0.0

    def build(self) -> ParamSet:
        return ParamSet(self.a, self.b, self.p, self.q)


class QuadratureConfig(_Strict):
    nodes_per_panel: int = 16
    panels: int = 4
    grading_exponent: float = 2.0

    def build(self) -> QuadratureSpec:
        return QuadratureSpec(self.nodes_per_panel, self.panels, self.grading_exponent)


FUNCTION_NAMES = ("zero", "constant", "monomial", "sin", "cos", "exp")


class FunctionConfig(_Strict):
    """``scale * base(rate * t + shift)`` with ``base`` chosen by ``name``.

    ``monomial`` uses ``t ** power``; ``constant`` ignores ``t``.
    """

    name: Literal["zero", "constant", "monomial", "sin", "cos", "exp"]
    scale: float = 1.0
    power: int = Field(default=1, ge=0)
    rate: float = 1.0
    shift: float = 0.0

    def parts(self):
        s, k, r, c = self.scale, self.power, self.rate, self.shift
        if self.name == "zero":
            return (lambda t: 0.0 * t), (lambda t: 0.0 * t)
        if self.name == "constant":
            return (lambda t: s + 0.0 * t), (lambda t: 0.0 * t)
        if self.name == "monomial":
            if k == 0:
                return (lambda t: s + 0.0 * t), (lambda t: 0.0 * t)
            return (lambda t: s * t**k), (lambda t: s * k * t ** (k - 1))
        if self.name == "sin":
            return (lambda t: s * np.sin(r * t + c)), (lambda t: s * r * np.cos(r * t + c))
        if self.name == "cos":
            return (lambda t: s * np.cos(r * t + c)), (lambda t: -s * r * np.sin(r * t + c))
        return (lambda t: s * np.exp(r * t + c)), (lambda t: s * r * np.exp(r * t + c))


def build_function(spec, domain) -> FunctionHandle:
    """One config or a list of configs (one per component) to a handle."""
    specs = spec if isinstance(spec, (list, tuple)) else [spec]
    pairs = [s.parts() for s in specs]

    def func(t):
        return np.stack([np.broadcast_to(f(t), np.shape(t)) for f, _ in pairs])

    def deriv(t):
        return np.stack([np.broadcast_to(d(t), np.shape(t)) for _, d in pairs])

    return FunctionHandle(func, deriv, tuple(domain), label="config")


Trajectory = Union[FunctionConfig, list[FunctionConfig]]


class LagrangianConfig(_Strict):
    builtin: str
    params: dict[str, float] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _known(self):
        if self.builtin not in BUILTINS:
            raise ValueError(f"unknown builtin Lagrangian {self.builtin!r}; known: {sorted(BUILTINS)}")
        return self


class OperatorSlot(_Strict):
    kernel: KernelConfig
    pset: PSetConfig


class IsoperimetricConfig(_Strict):
    G: LagrangianConfig
    xi: float


class SolverConfig(_Strict):
    basis_size: int = Field(default=8, ge=1)
    max_iters: int = Field(default=200, ge=1)
    grad_step: float = Field(default=1e-6, gt=0)
    tol: float = Field(default=1e-8, gt=0)

    def options(self) -> SolverOptions:
        return SolverOptions(self.max_iters, self.grad_step, self.tol)


class ProblemConfig(_Strict):
    lagrangian: LagrangianConfig
    N: int = Field(default=1, ge=1)
    alpha_kernel: KernelConfig = KernelConfig(kind="constant_one")
    beta: list[OperatorSlot] = Field(default_factory=list)
    gamma: list[OperatorSlot] = Field(default_factory=list)
    interval: tuple[float, float] = (0.0, 1.0)
    boundary_mode: Literal["fixed_both", "free_left"] = "fixed_both"
    y_a: Optional[list[float]] = None
    y_b: list[float]
    isoperimetric: Optional[IsoperimetricConfig] = None
    quadrature: QuadratureConfig = QuadratureConfig(nodes_per_panel=24, panels=6, grading_exponent=2.0)
    inner_quadrature: Optional[QuadratureConfig] = None

    def _lag(self, cfg: LagrangianConfig) -> LagrangianSpec:
        return builtin_lagrangian(
            cfg.builtin,
            N=self.N,
            alpha_kernel=self.alpha_kernel.build(),
            beta=tuple((s.kernel.build(), s.pset.build()) for s in self.beta),
            gamma=tuple((s.kernel.build(), s.pset.build()) for s in self.gamma),
            **cfg.params,
        )

    def build(self) -> ProblemSpec:
        iso = None
        if self.isoperimetric is not None:
            iso = IsoperimetricConstraint(self._lag(self.isoperimetric.G), self.isoperimetric.xi)
        return ProblemSpec(
            self._lag(self.lagrangian),
            self.interval,
            y_b=tuple(self.y_b),
            y_a=None if self.y_a is None else tuple(self.y_a),
            boundary_mode=self.boundary_mode,
            isoperimetric=iso,
            quad=self.quadrature.build(),
            inner_quad=None if self.inner_quadrature is None else self.inner_quadrature.build(),
        )


class OutputConfig(_Strict):
    path: Optional[str] = None
    format: Literal["csv", "json"] = "json"


class TransformationConfig(_Strict):
    kind: Literal["translation", "rotation"] = "translation"
    component: int = 0
    first: int = 0
    second: int = 1


class RunConfig(_Strict):
    """Union of all sections; each subcommand reads the ones it needs."""

    kernel: Optional[KernelConfig] = None
    pset: Optional[PSetConfig] = None
    quadrature: QuadratureConfig = QuadratureConfig()
    operator: Literal["k", "a", "b"] = "k"
    identity: Literal["k", "b"] = "k"
    f: Optional[Trajectory] = None
    g: Optional[Trajectory] = None
    points: list[float] = Field(default_factory=lambda: [0.5])
    diff_step: Optional[float] = None
    problem: Optional[ProblemConfig] = None
    solver: SolverConfig = SolverConfig()
    trajectory: Optional[Trajectory] = None
    grid: Optional[list[float]] = None
    grid_points: int = Field(default=32, ge=2)
    transformation: TransformationConfig = TransformationConfig()
    eps: list[float] = Field(default_factory=lambda: [1e-2, 1e-3, 1e-4])
    subintervals: int = Field(default=8, ge=1)
    order_mode: Literal["derived_one_minus_alpha", "as_printed_alpha"] = "derived_one_minus_alpha"
    threshold: Optional[float] = None
    output: OutputConfig = OutputConfig()

    def require(self, *names: str):
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            raise ConfigError(f"config is missing required section(s): {', '.join(missing)}")
        return tuple(getattr(self, n) for n in names)


def _format_validation(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"field {loc}: {e['msg']}")
    return "; ".join(lines)


def parse_config(text: str) -> RunConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_validation(exc)) from None


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)


def problem_to_config(problem: ProblemSpec) -> dict:
    """Inverse of ``ProblemConfig.build`` for problems made of builtins."""
    lag = problem.lagrangian

    def lag_cfg(spec: LagrangianSpec) -> dict:
        if spec.name not in BUILTINS:
            raise ConfigError(f"integrand {spec.name!r} is not a builtin and cannot be serialized")
        return {"builtin": spec.name, "params": dict(spec.params)}

    def slots(pairs):
        return [{"kernel": k.config(), "pset": P.to_dict()} for k, P in pairs]

    out = {
        "lagrangian": lag_cfg(lag),
        "N": lag.N,
        "alpha_kernel": lag.alpha_kernel.config(),
        "beta": slots(lag.beta),
        "gamma": slots(lag.gamma),
        "interval": list(problem.interval),
        "boundary_mode": problem.boundary_mode,
        "y_a": None if problem.y_a is None else list(problem.y_a),
        "y_b": list(problem.y_b),
        "quadrature": problem.quad.to_dict(),
    }
    if problem.inner_quad is not None:
        out["inner_quadrature"] = problem.inner_quad.to_dict()
    if problem.isoperimetric is not None:
        out["isoperimetric"] = {"G": lag_cfg(problem.isoperimetric.G), "xi": problem.isoperimetric.xi}
    return out


def problem_from_config(data: dict) -> ProblemSpec:
    try:
        return ProblemConfig.model_validate(data).build()
    except ValidationError as exc:
        raise ConfigError(_format_validation(exc)) from None


__all__ = [
    "ConfigError",
    "FunctionConfig",
    "KernelConfig",
    "ProblemConfig",
    "RunConfig",
    "build_function",
    "load_config",
    "parse_config",
    "problem_from_config",
    "problem_to_config",
]
