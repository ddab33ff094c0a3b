"""Exact solutions, error norms and convergence-order estimates."""

import math
from dataclasses import dataclass, fields
from typing import Callable, Tuple

import numpy as np
from numpy.polynomial import Polynomial

from .mesh import shishkin_two_sided
from .quadrature import gauss_legendre


@dataclass(frozen=True)
class ExactSolution:
    """A solution u of eps^4 u'''' + 4u = f together with its derivatives.

    ``derivs[k]`` evaluates u^(k) for k = 0..4.
    """

    eps: float
    derivs: Tuple[Callable, ...]
    f: Callable
    coefficients: Tuple[float, ...] = ()

    def __call__(self, x, deriv=0):
        return self.derivs[deriv](np.asarray(x, dtype=float))

    @property
    def u(self):
        return self.derivs[0]

    # v = eps^{3/2} u'' and its derivatives, k = 0, 1, 2
    def v(self, x, deriv=0):
        return self.eps**1.5 * self(x, deriv + 2)

    def residual(self, x):
        """eps^4 u'''' + 4u - f at ``x``."""
        x = np.asarray(x, dtype=float)
        return self.eps**4 * self(x, 4) + 4.0 * self(x, 0) - self.f(x)


def _layer_derivative(z, k, shift=0.0, sign=1.0, part="real"):
    # d^k/dx^k of Re/Im exp(z (shift + sign x)) = (sign z)^k exp(...)
    zk = (sign * z) ** k

    def fn(x):
        val = zk * np.exp(z * (shift + sign * np.asarray(x, dtype=float)))
        return val.real if part == "real" else val.imag

    return fn


def layer_function(eps):
    """The boundary-layer function exp(-x/eps) cos(x/eps) with f = 0."""
    z = -(1.0 + 1.0j) / eps
    derivs = tuple(_layer_derivative(z, k) for k in range(5))
    return ExactSolution(eps, derivs, lambda x: np.zeros_like(np.asarray(x, dtype=float)))


def manufactured_solution(eps):
    """u(x) = exp(-x/eps) cos(x/eps) + exp(x) with f = (4 + eps^4) exp(x).

    The layer part is Re exp(z x) with z = -(1+i)/eps; since (1+i)^4 = -4 it
    is annihilated by eps^4 d^4/dx^4 + 4.
    """
    z = -(1.0 + 1.0j) / eps

    def deriv(k):
        layer = _layer_derivative(z, k)
        return lambda x: layer(x) + np.exp(x)

    return ExactSolution(eps, tuple(deriv(k) for k in range(5)), lambda x: (4.0 + eps**4) * np.exp(x))


def manufactured_bc(exact):
    """(u(0), u'(0), u(1), u'(1)) of an exact solution."""
    return tuple(float(exact(xi, k)) for xi in (0.0, 1.0) for k in (0, 1))


def analytic_clamped_solution(eps, load_coeffs, exp_coeff=0.0):
    """Clamped solution for the load f(x) = q(x) + c exp(x), q cubic.

    ``load_coeffs`` are the ascending coefficients of q.  The particular
    solution is q/4 + c exp(x) / (4 + eps^4); the homogeneous correction is
    expanded in the decaying pairs Re/Im exp(z x) and Re/Im exp(z (1 - x)),
    z = -(1+i)/eps, so nothing overflows for small eps.
    """
    coeffs = np.atleast_1d(np.asarray(load_coeffs, dtype=float))
    if coeffs.size > 4:
        raise ValueError("polynomial part of the load must have degree at most 3")
    q = Polynomial(coeffs)
    cp = exp_coeff / (4.0 + eps**4)

    def particular(k):
        qk = (q / 4.0).deriv(k) if k else q / 4.0
        return lambda x: qk(x) + cp * np.exp(x)

    z = -(1.0 + 1.0j) / eps
    basis = [
        [_layer_derivative(z, k, 0.0, 1.0, part) for k in range(5)] for part in ("real", "imag")
    ] + [
        [_layer_derivative(z, k, 1.0, -1.0, part) for k in range(5)] for part in ("real", "imag")
    ]
    M = np.array([[g[k](xi) for g in basis] for xi in (0.0, 1.0) for k in (0, 1)])
    rhs = -np.array([particular(k)(xi) for xi in (0.0, 1.0) for k in (0, 1)])
    if np.linalg.cond(M) > 1e12:
        raise np.linalg.LinAlgError(f"boundary system is numerically singular for eps={eps}")
    c = np.linalg.solve(M, rhs)

    def deriv(k):
        up = particular(k)

        def fn(x):
            x = np.asarray(x, dtype=float)
            return up(x) + sum(ci * g[k](x) for ci, g in zip(c, basis))

        return fn

    def load(x):
        x = np.asarray(x, dtype=float)
        return q(x) + exp_coeff * np.exp(x)

    return ExactSolution(eps, tuple(deriv(k) for k in range(5)), load, tuple(c))


@dataclass(frozen=True)
class ErrorReport:
    err_u_L2: float
    err_u_dd: float
    err_v_L2: float
    err_v_dd: float
    balanced: float
    energy_standard: float

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def scaled(self, s):
        return ErrorReport(*(abs(s) * v for v in self.as_dict().values()))


def _quadrature_points(mesh, n_quad):
    rule = gauss_legendre(n_quad)
    t = 0.5 * (rule.points + 1.0)
    x = mesh.nodes[:-1, None] + mesh.widths[:, None] * t[None, :]
    jw = 0.5 * mesh.widths[:, None] * rule.weights[None, :]
    return t, x, jw


def _report(eps, jw, du, du_dd, dv, dv_dd):
    def l2(diff):
        return math.sqrt(float(np.sum(jw * diff**2)))

    eu, eu_dd, ev, ev_dd = l2(du), l2(du_dd), l2(dv), l2(dv_dd)
    terms = (eu, eps**1.5 * eu_dd, ev, eps**2 * ev_dd)
    return ErrorReport(
        *terms,
        balanced=math.sqrt(sum(a * a for a in terms)),
        energy_standard=math.sqrt(eps**4 * eu_dd**2 + 4.0 * eu**2),
    )


def error_norms(sol, exact, n_quad=None):
    """Error of a discrete solution against ``exact`` in every term of the
    balanced norm, plus the standard energy norm of u - u_h.

    The reference for v is eps^{3/2} u'' evaluated from ``exact``.
    """
    u_h, v_h = sol.u_h, sol.v_h
    t, x, jw = _quadrature_points(u_h.space.mesh, n_quad or u_h.space.degree + 6)
    return _report(
        exact.eps,
        jw,
        exact(x, 0) - u_h.element_values(t, 0),
        exact(x, 2) - u_h.element_values(t, 2),
        exact.v(x, 0) - v_h.element_values(t, 0),
        exact.v(x, 2) - v_h.element_values(t, 2),
    )


def roundoff_report(sol, n_quad=None):
    """Norms of the solver round-off probe, in the same terms as ``error_norms``.

    Returns None when the solve did not record a probe.
    """
    if sol.roundoff is None:
        return None
    du, dv = sol.roundoff
    t, _, jw = _quadrature_points(du.space.mesh, n_quad or du.space.degree + 6)
    return _report(
        sol.eps,
        jw,
        du.element_values(t, 0),
        du.element_values(t, 2),
        dv.element_values(t, 0),
        dv.element_values(t, 2),
    )


def exact_norms(exact, mesh=None, n_quad=20):
    """Standard energy norm of u and balanced norm of (u, eps^{3/2} u'').

    Integrated by composite Gauss quadrature on a mesh that resolves
    layers at both ends unless ``mesh`` is given.
    """
    eps = exact.eps
    if mesh is None:
        mesh = shishkin_two_sided(512, 8.0, min(eps, 1.0))
    _, x, jw = _quadrature_points(mesh, n_quad)
    u2 = float(np.sum(jw * exact(x, 0) ** 2))
    udd2 = float(np.sum(jw * exact(x, 2) ** 2))
    u4_2 = float(np.sum(jw * exact(x, 4) ** 2))
    standard = math.sqrt(eps**4 * udd2 + 4.0 * u2)
    # ||v||^2 = eps^3 ||u''||^2 and eps^4 ||v''||^2 = eps^7 ||u''''||^2
    balanced = math.sqrt(u2 + 2.0 * eps**3 * udd2 + eps**7 * u4_2)
    return standard, balanced


def nlogn(N):
    N = np.asarray(N, dtype=float)
    return np.log(N) / N


def inverse_n(N):
    return 1.0 / np.asarray(N, dtype=float)


MODELS = {"NlogN": nlogn, "N": inverse_n}


@dataclass(frozen=True)
class OrderEstimate:
    N: Tuple[int, ...]
    steps: Tuple[float, ...]
    least_squares: float
    model: str


def _orders(N, err, g):
    gN = g(N)
    steps = np.log(err[:-1] / err[1:]) / np.log(gN[:-1] / gN[1:])
    slope = np.polyfit(np.log(gN), np.log(err), 1)[0]
    return steps, float(slope)


def estimate_orders(points, model="NlogN", floor=0.0):
    """Per-step and least-squares convergence orders of ``(N, error)`` pairs.

    With ``model="NlogN"`` the order k solves err ~ (ln N / N)^k; with
    ``model="N"`` it solves err ~ N^-k.  Points whose error falls below
    ``floor`` are dropped before fitting (round-off plateau).
    """
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}; choose from {sorted(MODELS)}")
    pts = sorted((int(n), float(e)) for n, e in points)
    if any(e <= 0 for _, e in pts):
        raise ValueError("errors must be positive; drop exactly reproduced cases")
    N = np.array([n for n, _ in pts])
    if np.any(np.diff(N) <= 0):
        raise ValueError("N values must be strictly increasing")
    err = np.array([e for _, e in pts])
    keep = err >= floor
    N, err = N[keep], err[keep]
    if len(N) < 3:
        raise ValueError("need at least three points above the round-off floor")
    steps, slope = _orders(N, err, MODELS[model])
    return OrderEstimate(tuple(int(n) for n in N), tuple(float(s) for s in steps), slope, model)


def self_consistency(exact, n_points=50, rng=None):
    """Largest relative ODE residual of ``exact`` at random points."""
    rng = np.random.default_rng(rng)
    x = rng.uniform(0.0, 1.0, n_points)
    scale = max(1.0, float(np.max(np.abs(exact.f(x)))))
    return float(np.max(np.abs(exact.residual(x)))) / scale
