import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.interpolate import CubicSpline

from gfvc.kernels import ParamSet, make_kernel
from gfvc.operators import (
    DomainError,
    FunctionHandle,
    NonFiniteIntegrandError,
    a_op,
    b_op,
    check_ibp_b,
    check_ibp_k,
    k_op,
)
from gfvc.quadrature import QuadratureSpec

from problems import ONE, P_LEFT, ZERO, expk, fh, monomial, rl

G = math.gamma
X10 = np.linspace(0.1, 0.9, 10)


def test_k_rl_of_one():
    assert k_op(rl(0.5), P_LEFT, monomial(0), 0.25)[0] == pytest.approx(0.5641896, abs=1e-7)


@pytest.mark.parametrize("kernel", [rl(0.3), expk(0.7), ONE, make_kernel("hadamard", order=0.4)])
@pytest.mark.parametrize("P", [ParamSet(0.5, 1.5, 1, 0), ParamSet(0.5, 1.5, 0.2, -0.9)])
def test_k_of_zero(kernel, P):
    assert np.all(k_op(kernel, P, ZERO, [0.5, 0.9, 1.5]) == 0.0)


def test_k_constant_kernel_is_ordinary_integral():
    assert k_op(ONE, P_LEFT, monomial(1), 1.0)[0] == pytest.approx(0.5, abs=1e-14)


def test_k_branches_vanish_at_ends():
    right = ParamSet(0, 1, 0, 1)
    assert k_op(rl(0.5), right, monomial(1), 1.0)[0] == 0.0
    assert k_op(rl(0.5), P_LEFT, monomial(1), 0.0)[0] == 0.0


def test_k_shapes():
    vec = fh(lambda t: np.stack([t, t**2]), lambda t: np.stack([1 + 0 * t, 2 * t]))
    assert k_op(rl(0.5), P_LEFT, vec, 0.5).shape == (2,)
    assert k_op(rl(0.5), P_LEFT, vec, [0.2, 0.5, 0.7]).shape == (2, 3)


def test_vector_is_componentwise():
    vec = fh(lambda t: np.stack([t, t**2]))
    out = k_op(rl(0.4), P_LEFT, vec, X10)
    np.testing.assert_allclose(out[0], k_op(rl(0.4), P_LEFT, monomial(1), X10)[0], rtol=1e-14)
    np.testing.assert_allclose(out[1], k_op(rl(0.4), P_LEFT, monomial(2), X10)[0], rtol=1e-14)


def test_k_domain_error():
    with pytest.raises(DomainError):
        k_op(rl(0.5), P_LEFT, monomial(1), 1.2)


def test_k_non_finite_names_node():
    bad = fh(lambda t: np.where(t > 0.5, np.nan, t))
    with pytest.raises(NonFiniteIntegrandError) as err:
        k_op(ONE, P_LEFT, bad, 1.0)
    assert err.value.node > 0.5
    assert "t =" in str(err.value)


def test_b_caputo_examples():
    assert b_op(rl(0.5), P_LEFT, monomial(1), 1.0)[0] == pytest.approx(1.1283792, abs=1e-7)
    assert b_op(rl(0.5), P_LEFT, monomial(2), 1.0)[0] == pytest.approx(1.5045055, abs=1e-7)


@pytest.mark.parametrize("kernel", [rl(0.5), expk(-0.4), ONE])
def test_b_of_constant(kernel):
    c = fh(lambda t: 3.0 + 0 * t, lambda t: 0 * t)
    assert np.all(b_op(kernel, P_LEFT, c, X10) == 0.0)


def test_b_uses_fd_fallback_without_derivative():
    f = fh(lambda t: t**2)
    assert b_op(rl(0.5), P_LEFT, f, 1.0)[0] == pytest.approx(1.5045055, abs=1e-7)


def test_a_rl_derivative_examples():
    # t^{-alpha}/Gamma(1-alpha) evaluated inside the interval
    x = 0.9
    assert a_op(rl(0.5), P_LEFT, monomial(0), x)[0] == pytest.approx(x**-0.5 / G(0.5), rel=1e-8)
    assert a_op(rl(0.5), P_LEFT, monomial(1), 0.64)[0] == pytest.approx(0.9027033, abs=1e-7)
    assert np.all(a_op(rl(0.5), P_LEFT, ZERO, X10) == 0.0)


def test_a_near_endpoint_is_domain_error():
    with pytest.raises(DomainError, match="diff_step"):
        a_op(rl(0.5), P_LEFT, monomial(0), 1.0)
    a_op(rl(0.5), P_LEFT, monomial(0), 0.99, diff_step=1e-3)


@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75])
@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_monomial_suite(alpha, n):
    f = monomial(n)
    k_exact = G(n + 1) * X10 ** (n + alpha) / G(n + 1 + alpha)
    np.testing.assert_allclose(k_op(rl(alpha), P_LEFT, f, X10)[0], k_exact, rtol=1e-6)
    comp = rl(1 - alpha)
    if n >= 1:
        b_exact = G(n + 1) * X10 ** (n - alpha) / G(n + 1 - alpha)
        np.testing.assert_allclose(b_op(comp, P_LEFT, f, X10)[0], b_exact, rtol=1e-6)
    a_exact = G(n + 1) * X10 ** (n - alpha) / G(n + 1 - alpha)
    np.testing.assert_allclose(a_op(comp, P_LEFT, f, X10)[0], a_exact, rtol=1e-6)


coef = st.floats(-5, 5, allow_nan=False)


@settings(max_examples=25, deadline=None)
@given(st.lists(coef, min_size=3, max_size=3), st.lists(coef, min_size=3, max_size=3), coef)
def test_linearity(cf, cg, lam):
    def poly(c):
        return fh(lambda t: c[0] + c[1] * t + c[2] * t**2)

    P = ParamSet(0, 1, 0.4, 0.6)
    f, g = poly(cf), poly(cg)
    mix = fh(lambda t: f(t)[0] + lam * g(t)[0])
    lhs = k_op(rl(0.4), P, mix, X10)
    rhs = k_op(rl(0.4), P, f, X10) + lam * k_op(rl(0.4), P, g, X10)
    scale = 1 + np.abs(lhs).max()
    assert np.max(np.abs(lhs - rhs)) <= 1e-10 * scale


@pytest.mark.parametrize("kernel", [rl(0.3), expk(0.5), make_kernel("hadamard", order=0.6)])
def test_left_right_decomposition(kernel):
    P = ParamSet(0.5, 1.5, 0.3, -1.2)
    f = fh(lambda t: np.cos(t))
    x = np.linspace(0.5, 1.5, 9)
    whole = k_op(kernel, P, f, x)
    parts = 0.3 * k_op(kernel, ParamSet(0.5, 1.5, 1, 0), f, x) - 1.2 * k_op(kernel, ParamSet(0.5, 1.5, 0, 1), f, x)
    np.testing.assert_allclose(whole, parts, rtol=0, atol=1e-12)


def test_quadrature_convergence_when_panels_double():
    f = fh(lambda t: np.exp(3 * t))
    exact = k_op(rl(0.35), P_LEFT, f, X10, QuadratureSpec(24, 16, 2.0))[0]
    errs = []
    for panels in (2, 4, 8, 16):
        approx = k_op(rl(0.35), P_LEFT, f, X10, QuadratureSpec(3, panels, 2.0))[0]
        errs.append(np.max(np.abs(approx / exact - 1)))
    for e0, e1 in zip(errs, errs[1:]):
        assert e1 <= max(e0 / 2, 1e-10)


@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75])
def test_monomial_suite_stays_at_target_for_all_panel_counts(alpha):
    for panels in (1, 2, 4, 8, 16):
        quad = QuadratureSpec(16, panels, 2.0)
        for n in range(4):
            exact = G(n + 1) * X10 ** (n + alpha) / G(n + 1 + alpha)
            got = k_op(rl(alpha), P_LEFT, monomial(n), X10, quad)[0]
            assert np.max(np.abs(got / exact - 1)) <= quad.target_rel_tol


def test_variable_order_matches_rl_when_constant():
    vo = make_kernel("variable_order", order_function=lambda t, s: 0.6 + 0 * t)
    f = monomial(2)
    np.testing.assert_allclose(
        k_op(vo, P_LEFT, f, X10, QuadratureSpec(16, 16, 6.0))[0], k_op(rl(0.6), P_LEFT, f, X10)[0], rtol=1e-5
    )


def test_a_matches_spline_derivative():
    f = fh(lambda t: np.sin(2 * t) + t)
    comp = rl(0.6)
    s = np.linspace(0.05, 0.95, 181)
    spline = CubicSpline(s, k_op(comp, P_LEFT, f, s)[0])
    x = np.linspace(0.2, 0.8, 7)
    np.testing.assert_allclose(a_op(comp, P_LEFT, f, x)[0], spline(x, 1), atol=1e-4)


def test_ibp_k_examples():
    out = check_ibp_k(rl(0.5), P_LEFT, monomial(1), monomial(2))
    assert out.abs_residual <= 1e-6
    zero = check_ibp_k(rl(0.5), P_LEFT, ZERO, monomial(2))
    assert zero.lhs == 0.0 and zero.rhs == 0.0
    mixed = check_ibp_k(expk(0.5), ParamSet(0, 1, 0.3, 0.7),
                        fh(np.sin, np.cos), fh(np.cos, lambda t: -np.sin(t)))
    assert mixed.abs_residual <= 1e-8


def test_ibp_b_examples():
    out = check_ibp_b(rl(0.5), P_LEFT, monomial(1), monomial(2))
    assert out.abs_residual <= 1e-5
    const = check_ibp_b(rl(0.5), P_LEFT, monomial(0, 2.0), fh(np.cos, lambda t: -np.sin(t)))
    assert abs(const.lhs) <= 1e-5 and abs(const.rhs) <= 1e-5
    zero = check_ibp_b(rl(0.5), P_LEFT, monomial(1), ZERO)
    assert zero.lhs == 0.0 and abs(zero.rhs) == 0.0


def test_fd_derivative_fallback_accuracy():
    f = FunctionHandle(np.sin, domain=(0.0, 1.0))
    t = np.array([0.0, 1e-5, 0.5, 1.0])
    np.testing.assert_allclose(f.derivative(t)[0], np.cos(t), atol=1e-9)
