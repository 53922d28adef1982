"""Command-line front end.

Exit codes: 0 success, 1 usage or configuration error, 2 a checked value
exceeded its threshold (or validation produced findings).
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import noether as nt
from .config import ConfigError, RunConfig, build_function, load_config
from .kernels import KernelError
from .operators import DomainError, NonFiniteIntegrandError, a_op, b_op, check_ibp_b, check_ibp_k, k_op
from .oscillator import run_demo
from .ritz import ConstraintError, LineSearchError, solve_isoperimetric, solve_ritz
from .variational import (
    UsageError,
    el_residual,
    natural_bc_residual,
    residual_grid,
    validate_problem,
)

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_USAGE, EXIT_THRESHOLD = 0, 1, 2
DEFAULT_IBP_THRESHOLD = {"k": 1e-6, "b": 1e-5}


def fmt(v) -> str:
    """Twelve significant digits; exact zero prints as ``0.000000000000``."""
    v = float(v)
    if v == 0.0:
        return "0.000000000000"
    return f"{v:#.12g}"


class _UsageFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageFailure(f"{self.prog}: {message}")


class Result:
    """Scalars for the summary plus optional equal-length columns."""

    def __init__(self):
        self.summary: dict[str, object] = {}
        self.columns: dict[str, np.ndarray] = {}
        self.checked: tuple[str, float, float] | None = None
        self.findings: list[str] = []

    def add(self, name, value):
        self.summary[name] = value

    def column(self, name, values):
        self.columns[name] = np.asarray(values, dtype=float).reshape(-1)

    def check(self, name, value, threshold):
        if threshold is not None:
            self.checked = (name, float(value), float(threshold))

    @property
    def failed(self) -> bool:
        if self.findings:
            return True
        return self.checked is not None and not (self.checked[1] <= self.checked[2])

    def lines(self) -> list[str]:
        out = []
        for k, v in self.summary.items():
            out.append(f"{k} {_text(v)}")
        out.extend(f"finding {f}" for f in self.findings)
        if self.checked is not None:
            name, val, thr = self.checked
            status = "ok" if val <= thr else "FAIL"
            out.append(f"check {name} {fmt(val)} <= {fmt(thr)} {status}")
        return out

    def csv(self) -> str:
        buf = io.StringIO()
        if self.columns:
            names = list(self.columns)
            buf.write(",".join(names) + "\n")
            for row in zip(*(self.columns[n] for n in names)):
                buf.write(",".join(fmt(v) for v in row) + "\n")
        else:
            buf.write("name,value\n")
            for k, v in self.summary.items():
                buf.write(f"{k},{_text(v)}\n")
        return buf.getvalue()

    def json(self) -> str:
        doc = {
            "summary": {k: _jsonable(v) for k, v in self.summary.items()},
            "columns": {k: [fmt(x) for x in v] for k, v in self.columns.items()},
        }
        if self.findings:
            doc["findings"] = list(self.findings)
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def _text(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt(v)
    if isinstance(v, (list, tuple, np.ndarray)):
        return " ".join(_text(x) for x in np.asarray(v).reshape(-1).tolist())
    return str(v)


def _jsonable(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return fmt(v)
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in np.asarray(v).reshape(-1).tolist()]
    return v if v is None else str(v)


def _write(result: Result, path: str | None, fmt_name: str):
    if not path:
        return
    text = result.csv() if fmt_name == "csv" else result.json()
    with open(Path(path), "w", newline="\n") as fh:
        fh.write(text)


# --- subcommands -----------------------------------------------------------


def _op_eval(cfg: RunConfig, args) -> Result:
    kernel, pset, f = cfg.require("kernel", "pset", "f")
    P = pset.build()
    fh = build_function(f, (P.a, P.b))
    x = np.asarray(cfg.points, dtype=float)
    quad = cfg.quadrature.build()
    K = kernel.build()
    if cfg.operator == "k":
        vals = k_op(K, P, fh, x, quad)
    elif cfg.operator == "b":
        vals = b_op(K, P, fh, x, quad)
    else:
        vals = a_op(K, P, fh, x, quad, diff_step=cfg.diff_step)
    res = Result()
    res.column("x", x)
    for j, row in enumerate(vals):
        res.column(f"value_{j + 1}", row)
        res.add(f"value_{j + 1}", row)
    return res


def _ibp_check(cfg: RunConfig, args) -> Result:
    kernel, pset, f, g = cfg.require("kernel", "pset", "f", "g")
    P = pset.build()
    dom = (P.a, P.b)
    check = check_ibp_k if cfg.identity == "k" else check_ibp_b
    out = check(kernel.build(), P, build_function(f, dom), build_function(g, dom), cfg.quadrature.build())
    res = Result()
    res.add("lhs", out.lhs)
    res.add("rhs", out.rhs)
    res.add("abs_residual", out.abs_residual)
    thr = cfg.threshold if cfg.threshold is not None else DEFAULT_IBP_THRESHOLD[cfg.identity]
    res.check("abs_residual", out.abs_residual, thr)
    return res


def _solve(cfg: RunConfig, problem, diagnostics: bool = True):
    opts = cfg.solver.options()
    if problem.isoperimetric is not None:
        return solve_isoperimetric(problem, cfg.solver.basis_size, opts)
    return solve_ritz(problem, cfg.solver.basis_size, opts, diagnostics=diagnostics)


def _trajectory(cfg: RunConfig, problem):
    """Configured trajectory, or the Ritz solution when none is given."""
    if cfg.trajectory is not None:
        return build_function(cfg.trajectory, problem.interval), None
    sol = _solve(cfg, problem, diagnostics=False)
    return sol.evaluator, sol


def _grid(cfg: RunConfig, problem):
    if cfg.grid is not None:
        return np.asarray(cfg.grid, dtype=float)
    return residual_grid(problem, cfg.grid_points)


def _solve_cmd(cfg: RunConfig, args) -> Result:
    (pc,) = cfg.require("problem")
    problem = pc.build()
    sol = _solve(cfg, problem)
    d = sol.diagnostics
    res = Result()
    res.add("functional_value", d.functional_value)
    res.add("el_residual_l2", d.el_residual_l2)
    if d.natural_bc_residual is not None:
        res.add("natural_bc_residual", d.natural_bc_residual)
    if d.multiplier is not None:
        res.add("multiplier", d.multiplier)
        res.add("constraint_gap", d.constraint_gap)
        res.add("constraint_el_residual_l2", d.constraint_el_residual_l2)
    res.add("converged", d.converged)
    res.add("iterations", d.iterations)
    res.add("coefficients", sol.coefficients)
    t = np.linspace(problem.a, problem.b, cfg.grid_points)
    res.column("t", t)
    for j, row in enumerate(sol.evaluator.value(t)):
        res.column(f"y_{j + 1}", row)
    res.check("el_residual_l2", d.el_residual_l2, cfg.threshold)
    return res


def _residual_cmd(cfg: RunConfig, args) -> Result:
    (pc,) = cfg.require("problem")
    problem = pc.build()
    y, _ = _trajectory(cfg, problem)
    t = _grid(cfg, problem)
    r = el_residual(problem, y, t)
    res = Result()
    res.column("t", t)
    for j, row in enumerate(r):
        res.column(f"el_residual_{j + 1}", row)
    peak = float(np.max(np.abs(r)))
    res.add("el_residual_max", peak)
    res.add("el_residual_l2", float(np.sqrt(np.mean(r**2))))
    if problem.boundary_mode == "free_left":
        res.add("natural_bc_residual", natural_bc_residual(problem, y))
    res.check("el_residual_max", peak, cfg.threshold)
    return res


def _transformation(cfg: RunConfig, N: int):
    tc = cfg.transformation
    if tc.kind == "translation":
        return nt.translation(N, tc.component)
    return nt.rotation(N, tc.first, tc.second)


def _noether_cmd(cfg: RunConfig, args) -> Result:
    (pc,) = cfg.require("problem")
    problem = pc.build()
    y, _ = _trajectory(cfg, problem)
    xf = _transformation(cfg, problem.lagrangian.N)
    t = _grid(cfg, problem)
    subs = nt.random_subintervals(problem.a, problem.b, cfg.subintervals, seed=args.seed)
    defects = nt.invariance_defects(problem, xf, y, cfg.eps, subs)
    nci = nt.nci_residual(problem, xf, y, t)
    nr = nt.noether_residual(problem, xf, y, t)
    res = Result()
    for e, row in zip(cfg.eps, defects):
        res.add(f"invariance_defect[eps={fmt(e)}]", float(row.max()))
    res.add("nci_residual_max", float(np.max(np.abs(nci))))
    peak = float(np.max(np.abs(nr)))
    res.add("noether_residual_max", peak)
    res.column("t", t)
    res.column("nci_residual", nci)
    res.column("noether_residual", nr)
    res.check("noether_residual_max", peak, cfg.threshold)
    return res


def _motion_cmd(cfg: RunConfig, args) -> Result:
    (pc,) = cfg.require("problem")
    problem = pc.build()
    y, _ = _trajectory(cfg, problem)
    t = None if cfg.grid is None else np.asarray(cfg.grid, dtype=float)
    mc = nt.constant_of_motion(problem, y, t, cfg.order_mode)
    res = Result()
    res.add("order_mode", cfg.order_mode)
    res.add("mean", float(np.mean(mc.values)))
    res.add("flatness", mc.flatness)
    res.column("t", mc.t)
    res.column("value", mc.values)
    res.check("flatness", mc.flatness, cfg.threshold)
    return res


def _validate_cmd(cfg: RunConfig, args) -> Result:
    (pc,) = cfg.require("problem")
    problem = pc.build()
    res = Result()
    res.findings = validate_problem(problem, seed=args.seed)
    res.add("findings", len(res.findings))
    return res


def _demo_oscillator(args) -> Result:
    d = run_demo(gamma=args.gamma, omega=args.omega, basis_size=args.basis_size, points=args.points)
    res = Result()
    res.column("t", d.t)
    for j in range(3):
        res.column(f"y_{j + 1}", d.y[j])
    for j in range(3):
        res.column(f"analytic_{j + 1}", d.analytic[j])
    for j in range(3):
        res.column(f"el_residual_{j + 1}", d.el_residual[j])
    res.column("momentum_residual", d.momentum_residual)
    res.column("rotation_residual", d.rotation_residual)
    res.add("linf_error_vs_analytic", d.linf_error)
    res.add("el_residual_max", d.falva_linf)
    res.add("converged", d.converged)
    res.check("linf_error_vs_analytic", d.linf_error, args.threshold)
    return res


CONFIG_COMMANDS = {
    "ibp-check": _ibp_check,
    "solve": _solve_cmd,
    "residual": _residual_cmd,
    "noether": _noether_cmd,
    "constant-of-motion": _motion_cmd,
    "validate": _validate_cmd,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized sampling")
    common.add_argument("--output", help="output file (overrides output.path in the config)")
    common.add_argument("--format", choices=("csv", "json"), help="output format")

    parser = _Parser(prog="gfvc", description="Generalized fractional variational calculus toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    op = sub.add_parser("op", help="operator evaluation")
    op_sub = op.add_subparsers(dest="action", parser_class=_Parser)
    op_sub.add_parser("eval", parents=[common], help="evaluate K, B or A at points")

    for name in CONFIG_COMMANDS:
        sub.add_parser(name, parents=[common])

    demo = sub.add_parser("demo", help="worked demonstrations")
    demo_sub = demo.add_subparsers(dest="action", parser_class=_Parser)
    osc = demo_sub.add_parser("oscillator", parents=[common], help="damped harmonic oscillator")
    osc.add_argument("--gamma", type=float, default=0.1)
    osc.add_argument("--omega", type=float, default=2.0)
    osc.add_argument("--basis-size", type=int, default=20)
    osc.add_argument("--points", type=int, default=32)
    osc.add_argument("--threshold", type=float, default=1e-3)
    osc.set_defaults(output_default="oscillator_demo.csv")
    return parser


def _dispatch(args) -> Result:
    if args.command == "demo":
        if args.action != "oscillator":
            raise _UsageFailure("gfvc demo: choose a demonstration (oscillator)")
        return _demo_oscillator(args)
    if args.command == "op" and args.action != "eval":
        raise _UsageFailure("gfvc op: choose an action (eval)")
    if not args.config:
        raise _UsageFailure(f"gfvc {args.command}: --config is required")
    cfg = load_config(args.config)
    if args.command == "op":
        return _op_eval(cfg, args), cfg
    return CONFIG_COMMANDS[args.command](cfg, args), cfg


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise _UsageFailure("gfvc: choose a subcommand (see --help)")
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
        out = _dispatch(args)
        result, cfg = out if isinstance(out, tuple) else (out, None)
        path = args.output or (cfg.output.path if cfg else getattr(args, "output_default", None))
        fmt_name = args.format or (cfg.output.format if cfg else "csv")
        _write(result, path, fmt_name)
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    except (_UsageFailure, ConfigError, UsageError, KernelError, DomainError) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_USAGE
    except (NonFiniteIntegrandError, LineSearchError, ConstraintError, ValueError) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_USAGE
    for line in result.lines():
        print(line, file=stdout)
    if path:
        print(f"wrote {path}", file=stdout)
    return EXIT_THRESHOLD if result.failed else EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
