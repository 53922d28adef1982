import csv
import io
import json
from pathlib import Path

import numpy as np
import pytest

from gfvc.cli import fmt, run
from gfvc.config import ConfigError, parse_config, problem_from_config, problem_to_config
from gfvc.kernels import ParamSet
from gfvc.lagrangians import builtin_lagrangian
from gfvc.variational import IsoperimetricConstraint, ProblemSpec, evaluate_functional

from problems import damped_sho_problem, dirichlet_problem, example2_problem, expk, fh, isoperimetric_problem, rl

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def write(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(data if isinstance(data, str) else json.dumps(data))
    return str(p)


def test_fmt():
    assert fmt(0.0) == "0.000000000000"
    assert fmt(-0.0) == "0.000000000000"
    assert fmt(1.0) == "1.00000000000"
    assert fmt(0.5641895835477563) == "0.564189583548"


def test_op_eval_zero():
    code, out, _ = call("op", "eval", "--config", str(CONFIGS / "op_eval_zero.json"))
    assert code == 0
    assert out.strip() == "value_1 0.000000000000"


def test_op_eval_rl_of_one(tmp_path):
    cfg = {"kernel": {"kind": "riemann_liouville", "order": 0.5}, "pset": {},
           "f": {"name": "constant"}, "points": [0.25]}
    code, out, _ = call("op", "eval", "--config", write(tmp_path, cfg))
    assert code == 0
    assert out.split()[1] == "0.564189583548"


def test_ibp_check_passes():
    code, out, _ = call("ibp-check", "--config", str(CONFIGS / "ibp_rl.json"))
    assert code == 0
    assert "ok" in out


def test_threshold_violation_exits_two(tmp_path):
    cfg = json.loads((CONFIGS / "residual_line.json").read_text())
    cfg["trajectory"] = {"name": "monomial", "power": 2}
    code, out, _ = call("residual", "--config", write(tmp_path, cfg))
    assert code == 2
    assert "FAIL" in out


def test_validate_findings_exit_two(tmp_path):
    cfg = {"problem": {"lagrangian": {"builtin": "quadratic", "params": {"yp": 1.0, "v": 1.0}},
                       "beta": [{"kernel": {"kind": "hadamard", "order": 0.5}, "pset": {}}],
                       "y_a": [0.0], "y_b": [1.0]}}
    code, out, _ = call("validate", "--config", write(tmp_path, cfg))
    assert code == 2
    assert "Hadamard" in out


def test_validate_clean():
    code, out, _ = call("validate", "--config", str(CONFIGS / "solve_damped.json"))
    assert code == 0
    assert "findings 0" in out


def test_unknown_key_names_field(tmp_path):
    cfg = {"kernal": {"kind": "riemann_liouville", "order": 0.5}}
    code, _, err = call("op", "eval", "--config", write(tmp_path, cfg))
    assert code == 1
    assert "kernal" in err


def test_syntax_error_names_line(tmp_path):
    code, _, err = call("op", "eval", "--config", write(tmp_path, '{\n  "kernel": ,\n}'))
    assert code == 1
    assert "line 2" in err


@pytest.mark.parametrize("argv", [[], ["bogus"], ["op"], ["op", "eval"], ["solve", "--config", "/nonexistent.json"],
                                  ["demo"], ["demo", "oscillator", "--gamma", "x"]])
def test_usage_errors_exit_one(argv):
    assert call(*argv)[0] == 1


def test_missing_section(tmp_path):
    code, _, err = call("op", "eval", "--config", write(tmp_path, {"points": [0.5]}))
    assert code == 1
    assert "kernel" in err


def test_bad_order_is_usage_error(tmp_path):
    cfg = {"kernel": {"kind": "riemann_liouville", "order": 1.5}, "pset": {}, "f": {"name": "zero"}}
    assert call("op", "eval", "--config", write(tmp_path, cfg))[0] == 1


def test_outside_domain_is_usage_error(tmp_path):
    cfg = {"kernel": {"kind": "riemann_liouville", "order": 0.5}, "pset": {}, "f": {"name": "zero"},
           "points": [1.5]}
    assert call("op", "eval", "--config", write(tmp_path, cfg))[0] == 1


def test_solve_csv_and_json(tmp_path):
    csv_path = tmp_path / "out.csv"
    code, out, _ = call("solve", "--config", str(CONFIGS / "solve_damped.json"), "--output", str(csv_path))
    assert code == 0
    rows = list(csv.reader(csv_path.read_text().splitlines()))
    assert rows[0] == ["t", "y_1"]
    assert float(rows[-1][1]) == pytest.approx(1.0, abs=1e-9)
    assert b"\r\n" not in csv_path.read_bytes()
    json_path = tmp_path / "out.json"
    call("solve", "--config", str(CONFIGS / "solve_damped.json"), "--output", str(json_path), "--format", "json")
    data = json.loads(json_path.read_text())
    assert data["summary"]["converged"] in ("true", True, "True")


def test_isoperimetric_config():
    code, out, _ = call("solve", "--config", str(CONFIGS / "isoperimetric.json"))
    assert code == 0
    line = next(l for l in out.splitlines() if l.startswith("multiplier"))
    assert float(line.split()[1]) == pytest.approx(6.0, abs=1e-6)


def test_noether_and_motion_configs():
    assert call("noether", "--config", str(CONFIGS / "free_particle_noether.json"))[0] == 0
    assert call("constant-of-motion", "--config", str(CONFIGS / "constant_of_motion.json"))[0] == 0


def test_demo_default_output(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    code, out, _ = call("demo", "oscillator", "--basis-size", "12", "--points", "8")
    assert code == 0
    text = (tmp_path / "oscillator_demo.csv").read_text().splitlines()
    assert text[0].startswith("t,y_1,y_2,y_3,analytic_1")
    assert len(text) == 9


def test_seeded_runs_identical(tmp_path):
    args = ["noether", "--config", str(CONFIGS / "free_particle_noether.json"), "--seed", "11"]
    first = call(*args)
    assert first == call(*args)


def _probe_problems():
    P = ParamSet(0, 1, 0.3, 0.7)
    yield dirichlet_problem(expk(0.4))
    yield dirichlet_problem(rl(0.6), mode="free_left")
    yield damped_sho_problem()
    yield example2_problem(0.7)
    yield isoperimetric_problem(0.3)
    yield ProblemSpec(builtin_lagrangian("vertical", N=3, alpha_kernel=expk(0.2), gravity=2.0), (0.0, 1.0),
                      (1.0, 0.5, 0.25), (0.0, 0.0, 0.0))
    lag = builtin_lagrangian("quadratic", alpha_kernel=rl(0.8), beta=((rl(0.5), P),), gamma=((expk(-1.0), P),),
                             yp=1.0, v=0.5, w=0.25, source=0.1)
    yield ProblemSpec(lag, (0.0, 1.0), (1.0,), (0.5,))
    yield ProblemSpec(builtin_lagrangian("harmonic", N=2, stiffness=2.0), (0.0, 2.0), (1.0, -1.0), (0.0, 0.5))
    G = builtin_lagrangian("half_square", alpha_kernel=expk(0.2))
    yield ProblemSpec(builtin_lagrangian("dirichlet", alpha_kernel=expk(0.2)), (0.0, 1.0), (0.0,), (0.0,),
                      isoperimetric=IsoperimetricConstraint(G, 0.1))
    yield ProblemSpec(builtin_lagrangian("free_particle", mass=2.0), (1.0, 3.0), (2.0,), (1.0,))


def test_problem_round_trip_preserves_functional():
    rng = np.random.default_rng(0)
    problems = list(_probe_problems())
    assert len(problems) == 10
    for problem in problems:
        data = json.loads(json.dumps(problem_to_config(problem)))
        again = problem_from_config(data)
        assert problem_to_config(again) == problem_to_config(problem)
        N = problem.lagrangian.N
        c = rng.normal(size=(N, 3))
        y = fh(lambda t, c=c: c @ np.stack([np.ones_like(t), t, np.sin(t)]),
               lambda t, c=c: c @ np.stack([np.zeros_like(t), np.ones_like(t), np.cos(t)]),
               domain=problem.interval)
        assert abs(evaluate_functional(again, y) - evaluate_functional(problem, y)) <= 1e-12


def test_parse_config_rejects_unknown_builtin():
    with pytest.raises(ConfigError, match="unknown builtin"):
        parse_config(json.dumps({"problem": {"lagrangian": {"builtin": "nope"}, "y_b": [1.0]}}))
