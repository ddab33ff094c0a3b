import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_bvp as scipy_solve_bvp

from shellfem.analysis import (
    ErrorReport,
    ExactSolution,
    analytic_clamped_solution,
    error_norms,
    estimate_orders,
    exact_norms,
    layer_function,
    manufactured_bc,
    manufactured_solution,
    nlogn,
    self_consistency,
)
from shellfem.mesh import shishkin_one_sided, uniform
from shellfem.spline import DiscreteFunction, build_space, interpolate
from shellfem.system import DiscreteSolution, ProblemConfig, solve_bvp


def test_manufactured_values():
    for eps in (0.5, 1e-2, 1e-4):
        u = manufactured_solution(eps)
        assert u(0.0) == pytest.approx(2.0)
        assert u(0.0, 1) == pytest.approx(1.0 - 1.0 / eps, rel=1e-14)
        x = np.linspace(0, 1, 11)
        np.testing.assert_allclose(u.f(x) / np.exp(x), 4.0 + eps**4, rtol=1e-15)


@pytest.mark.parametrize("eps", [0.3, 0.05])
def test_manufactured_derivatives_against_mpmath(eps):
    u = manufactured_solution(eps)
    mp_u = lambda x: mpmath.exp(-x / eps) * mpmath.cos(x / eps) + mpmath.exp(x)
    with mpmath.workdps(40):
        for x in (0.0, 0.13, 0.71):
            for k in range(5):
                ref = float(mpmath.diff(mp_u, mpmath.mpf(x), k))
                assert u(x, k) == pytest.approx(ref, rel=1e-12, abs=1e-12 * eps**-k)


@pytest.mark.parametrize("eps", [1.0, 1e-2, 1e-5])
def test_self_consistency(eps):
    assert self_consistency(manufactured_solution(eps), rng=1) <= 1e-8
    assert self_consistency(layer_function(eps), rng=2) <= 1e-8
    exact = analytic_clamped_solution(eps, [1.0, -2.0, 0.5, 3.0], exp_coeff=0.7)
    assert self_consistency(exact, rng=3) <= 1e-8


def test_clamped_zero_load():
    exact = analytic_clamped_solution(1e-2, [0.0])
    assert np.all(np.asarray(exact.coefficients) == 0.0)
    assert np.all(exact(np.linspace(0, 1, 9)) == 0.0)


def test_clamped_constant_load_interior():
    exact = analytic_clamped_solution(1e-3, [4.0])
    assert abs(exact(0.5) - 1.0) <= 1e-10


@settings(max_examples=30, deadline=None)
@given(
    log_eps=st.floats(math.log(1e-5), math.log(0.25)),
    coeffs=st.lists(st.floats(-5, 5), min_size=1, max_size=4),
    c_exp=st.floats(-2, 2),
)
def test_clamped_solution_defining_equations(log_eps, coeffs, c_exp):
    exact = analytic_clamped_solution(math.exp(log_eps), coeffs, c_exp)
    x = np.random.default_rng(0).uniform(0, 1, 50)
    fmax = max(1.0, np.abs(exact.f(np.linspace(0, 1, 101))).max())
    assert np.abs(exact.residual(x)).max() <= 1e-8 * fmax
    assert np.abs(manufactured_bc(exact)).max() <= 1e-10 * fmax


def test_clamped_solution_rejects_quartic():
    with pytest.raises(ValueError):
        analytic_clamped_solution(0.1, [0, 0, 0, 0, 1.0])


@pytest.mark.parametrize("eps", [0.5, 0.2])
def test_clamped_solution_against_scipy_bvp(eps):
    load = lambda x: 1.0 + x - 2 * x**3 + 0.5 * np.exp(x)
    exact = analytic_clamped_solution(eps, [1.0, 1.0, 0.0, -2.0], exp_coeff=0.5)

    def rhs(x, y):
        return np.vstack([y[1], y[2], y[3], (load(x) - 4 * y[0]) / eps**4])

    def bc(ya, yb):
        return np.array([ya[0], ya[1], yb[0], yb[1]])

    x = np.linspace(0, 1, 201)
    ref = scipy_solve_bvp(rhs, bc, x, np.zeros((4, x.size)), tol=1e-10, max_nodes=100000)
    assert ref.success
    np.testing.assert_allclose(exact(x), ref.sol(x)[0], atol=1e-7)


def test_layer_standard_norm_scales_like_sqrt_eps():
    for eps in (1e-2, 1e-3):
        s1, b1 = exact_norms(layer_function(eps))
        s2, b2 = exact_norms(layer_function(eps / 4))
        assert s1 / s2 == pytest.approx(2.0, rel=0.1)
        assert 0.8 <= b1 / b2 <= 1.3


def cubic_exact(eps):
    q = np.polynomial.Polynomial([0.3, -1.0, 0.5, 2.0])
    d = [q.deriv(k) for k in range(5)]
    # u cubic: eps^4 u'''' = 0, so f = 4u
    return ExactSolution(eps, tuple(d), lambda x: 4.0 * q(x)), d


def interpolant_solution(exact, mesh, p):
    us = build_space(mesh, p, clamped=True)
    vs = build_space(mesh, p)
    u = interpolate(us, lambda x: exact(x), lambda x: exact(x, 1), lambda x: exact(x, 2))
    v = interpolate(vs, exact.v, lambda x: exact.v(x, 1), lambda x: exact.v(x, 2))
    return DiscreteSolution(u, v, eps=exact.eps)


def test_interpolant_of_cubic_has_zero_error():
    exact, _ = cubic_exact(0.1)
    sol = interpolant_solution(exact, shishkin_one_sided(8, 4.0, 0.1), 3)
    report = error_norms(sol, exact)
    assert max(report.as_dict().values()) <= 1e-9


def test_zero_solution_against_zero():
    exact = analytic_clamped_solution(0.1, [0.0])
    sol = solve_bvp(ProblemConfig(0.1, uniform(4)))
    assert all(v == 0.0 for v in error_norms(sol, exact).as_dict().values())


def test_error_norms_are_homogeneous(rng):
    eps = 0.05
    exact = manufactured_solution(eps)
    mesh = shishkin_one_sided(16, 4.0, eps)
    base = interpolant_solution(exact, mesh, 4)
    du = rng.normal(size=base.u_h.space.n_dofs)
    dv = rng.normal(size=base.v_h.space.n_dofs)
    s = -2.5

    def shifted(a):
        return DiscreteSolution(
            DiscreteFunction(base.u_h.space, base.u_h.coeffs + a * du),
            DiscreteFunction(base.v_h.space, base.v_h.coeffs + a * dv),
            eps=eps,
        )

    # exact = base interpolant itself, so the error equals the perturbation
    ref = ExactFromSolution(base)
    r1 = error_norms(shifted(1.0), ref)
    rs = error_norms(shifted(s), ref)
    for k, v in r1.scaled(s).as_dict().items():
        assert rs.as_dict()[k] == pytest.approx(v, rel=1e-10)


class ExactFromSolution:
    """Duck-typed exact solution backed by a discrete pair."""

    def __init__(self, sol):
        self.sol, self.eps = sol, sol.eps

    def __call__(self, x, deriv=0):
        return self.sol.u_h(np.ravel(x), deriv).reshape(np.shape(x))

    def v(self, x, deriv=0):
        return self.sol.v_h(np.ravel(x), deriv).reshape(np.shape(x))


def test_error_report_invariants(rng):
    eps = 1e-2
    exact = manufactured_solution(eps)
    mesh = shishkin_one_sided(16, 4.0, eps)
    sol = solve_bvp(ProblemConfig(eps, mesh, load=exact.f, bc=manufactured_bc(exact)))
    rep = error_norms(sol, exact)
    parts = [rep.err_u_L2, rep.err_u_dd, rep.err_v_L2, rep.err_v_dd]
    assert all(np.isfinite(parts)) and min(parts) > 0
    assert rep.balanced >= max(parts)
    assert rep.balanced == pytest.approx(math.sqrt(sum(p * p for p in parts)))


def test_orders_synthetic_exact():
    N = [8, 16, 32, 64]
    est = estimate_orders([(n, float(nlogn(n)) ** 4) for n in N])
    np.testing.assert_allclose(est.steps, 4.0, rtol=1e-12)
    assert est.least_squares == pytest.approx(4.0)


@pytest.mark.parametrize("c", [1e-9, 1.0, 3.7e5])
def test_orders_scale_invariant(c):
    N = [8, 16, 32, 64, 128]
    est = estimate_orders([(n, c * float(nlogn(n)) ** 2) for n in N])
    np.testing.assert_allclose(est.steps, 2.0, rtol=1e-12)


def test_orders_plain_model():
    N = [4, 8, 16]
    est = estimate_orders([(n, n**-3.0) for n in N], model="N")
    np.testing.assert_allclose(est.steps, 3.0)


def test_orders_floor_drops_plateau():
    pts = [(8, 1e-2), (16, 1e-3), (32, 1e-4), (64, 1e-13)]
    est = estimate_orders(pts, floor=1e-10)
    assert est.N == (8, 16, 32)


@pytest.mark.parametrize(
    "pts",
    [
        [(8, 1.0), (16, 0.0), (32, 0.1)],
        [(8, 1.0), (8, 0.5), (32, 0.1)],
        [(8, 1.0), (16, 0.5)],
    ],
)
def test_orders_rejections(pts):
    with pytest.raises(ValueError):
        estimate_orders(pts)


def test_orders_unknown_model():
    with pytest.raises(ValueError):
        estimate_orders([(4, 1), (8, 0.5), (16, 0.2)], model="h2")


def test_error_report_scaled():
    rep = ErrorReport(1, 2, 3, 4, 5, 6)
    assert rep.scaled(-2).as_dict()["energy_standard"] == 12
