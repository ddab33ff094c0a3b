"""Assembly and solution of the mixed (u, v) scheme.

The unknowns are u in the clamped spline space and v = eps^{3/2} u'' in the
unconstrained one.  The bilinear form is

    B((u,v),(u*,v*)) = lam <v - e32 u'', v* - e32 u*''>
                       + <e52 v'' + 4u, e32 v*'' + 4u*>

with e32 = eps^{3/2}, e52 = eps^{5/2}, and the load functional is
F((u*,v*)) = <f, e32 v*'' + 4u*>.  B is not symmetric.

Global unknowns interleave the two fields, index 2*dof + field, which keeps
the operator banded with half-bandwidth 2p+1.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.linalg import lapack

from .mesh import Mesh
from .quadrature import gauss_legendre
from .spline import DiscreteFunction, SplineSpace, build_space

log = logging.getLogger(__name__)


class SingularSystemError(ArithmeticError):
    """Raised when the banded factorization meets an exactly zero pivot."""

    def __init__(self, pivot):
        self.pivot = pivot
        super().__init__(f"singular system: zero pivot at row {pivot}")


@dataclass(frozen=True)
class ProblemConfig:
    eps: float
    mesh: Mesh
    load: Callable = None
    lam: float = 3.0
    degree: int = 3
    bc: Tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    matrix_quad: int = None
    load_quad: int = None

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.lam < 3:
            raise ValueError(f"lambda must be >= 3 for coercivity, got {self.lam}")
        if self.degree < 3:
            raise ValueError(f"degree must be >= 3, got {self.degree}")
        if len(self.bc) != 4:
            raise ValueError("bc needs four values: u(0), u'(0), u(1), u'(1)")

    @property
    def n_matrix_quad(self):
        return self.matrix_quad or self.degree + 2

    @property
    def n_load_quad(self):
        return self.load_quad or self.degree + 6


@dataclass(frozen=True, eq=False)
class BandedSystem:
    """Galerkin operator restricted to the free unknowns, in LAPACK band layout."""

    u_space: SplineSpace
    v_space: SplineSpace
    matrix: sp.csr_matrix
    band: np.ndarray
    kl: int
    ku: int
    rhs: np.ndarray
    free: np.ndarray

    @property
    def bandwidth(self):
        return self.kl + self.ku + 1

    @property
    def size(self):
        return len(self.rhs)


@dataclass(frozen=True, eq=False)
class DiscreteSolution:
    u_h: DiscreteFunction
    v_h: DiscreteFunction
    residual: float = 0.0
    cond_est: float = float("nan")
    eps: float = float("nan")
    roundoff: Optional[Tuple[DiscreteFunction, DiscreteFunction]] = None

    @property
    def n_dofs(self):
        return self.u_h.space.n_dofs + self.v_h.space.n_dofs


def _field_factors(eps):
    e32 = eps**1.5
    e52 = eps**2.5
    return e32, e52


def _quad_data(mesh, n):
    rule = gauss_legendre(n)
    t = 0.5 * (rule.points + 1.0)
    jw = 0.5 * mesh.widths[:, None] * rule.weights[None, :]
    return t, jw


def _pair_terms(u_tab, v_tab, eps, trial):
    """The two factors entering B for u- and v-basis functions.

    ``u_tab``/``v_tab`` are (3, ...) value/derivative tables.  Trial
    functions enter as (v - e32 u'', e52 v'' + 4u), test functions as
    (v* - e32 u*'', e32 v*'' + 4u*).
    """
    e32, e52 = _field_factors(eps)
    first_u = -e32 * u_tab[2]
    second_u = 4.0 * u_tab[0]
    first_v = v_tab[0]
    second_v = (e52 if trial else e32) * v_tab[2]
    return first_u, second_u, first_v, second_v


def local_matrices(u_space, v_space, eps, lam, n_quad):
    """Element matrices, shape (N, 2(p+1), 2(p+1)), rows = test, cols = trial.

    Local ordering interleaves the fields: (u_0, v_0, u_1, v_1, ...).
    """
    t, jw = _quad_data(u_space.mesh, n_quad)
    tab = u_space.basis_tables(t)  # both spaces share the local basis
    N, nl, nq = tab.shape[1:]
    fu, su, fv, sv = _pair_terms(tab, tab, eps, trial=True)
    trial1 = np.empty((N, 2 * nl, nq))
    trial2 = np.empty_like(trial1)
    trial1[:, 0::2], trial1[:, 1::2] = fu, fv
    trial2[:, 0::2], trial2[:, 1::2] = su, sv
    fu, su, fv, sv = _pair_terms(tab, tab, eps, trial=False)
    test1 = np.empty_like(trial1)
    test2 = np.empty_like(trial1)
    test1[:, 0::2], test1[:, 1::2] = fu, fv
    test2[:, 0::2], test2[:, 1::2] = su, sv
    return lam * np.einsum("eiq,ejq,eq->eij", test1, trial1, jw) + np.einsum(
        "eiq,ejq,eq->eij", test2, trial2, jw
    )


def local_loads(u_space, eps, load, n_quad):
    """Element load vectors F(phi) for the interleaved local basis."""
    e32, _ = _field_factors(eps)
    mesh = u_space.mesh
    t, jw = _quad_data(mesh, n_quad)
    x = mesh.nodes[:-1, None] + mesh.widths[:, None] * t[None, :]
    fx = np.asarray(load(x), dtype=float) * jw
    tab = u_space.basis_tables(t)
    N, nl = tab.shape[1:3]
    out = np.empty((N, 2 * nl))
    out[:, 0::2] = 4.0 * np.einsum("eiq,eq->ei", tab[0], fx)
    out[:, 1::2] = e32 * np.einsum("eiq,eq->ei", tab[2], fx)
    return out


def _global_index(space):
    dm = space.dof_map
    idx = np.empty((dm.shape[0], 2 * dm.shape[1]), dtype=int)
    idx[:, 0::2] = 2 * dm
    idx[:, 1::2] = 2 * dm + 1
    return idx


def lifting_function(u_space, bc):
    coeffs = np.zeros(u_space.n_dofs)
    coeffs[u_space.bc_mask] = bc
    return DiscreteFunction(u_space, coeffs)


def to_band(matrix, kl, ku):
    """Copy a square sparse matrix into LAPACK general-band storage with
    ``kl`` extra rows reserved for fill-in."""
    coo = matrix.tocoo()
    n = matrix.shape[0]
    ab = np.zeros((2 * kl + ku + 1, n))
    ab[kl + ku + coo.row - coo.col, coo.col] = coo.data
    return ab


def assemble(config):
    """Assemble the reduced system and the boundary lifting.

    Returns ``(system, lifting)``; ``lifting`` carries the four boundary
    values of u and is zero elsewhere.
    """
    mesh, p, eps = config.mesh, config.degree, config.eps
    u_space = build_space(mesh, p, clamped=True)
    v_space = build_space(mesh, p, clamped=False)
    n = 2 * u_space.n_dofs

    ke = local_matrices(u_space, v_space, eps, config.lam, config.n_matrix_quad)
    idx = _global_index(u_space)
    rows = np.broadcast_to(idx[:, :, None], ke.shape).ravel()
    cols = np.broadcast_to(idx[:, None, :], ke.shape).ravel()
    A = sp.csr_matrix((ke.ravel(), (rows, cols)), shape=(n, n))

    F = np.zeros(n)
    if config.load is not None:
        fe = local_loads(u_space, eps, config.load, config.n_load_quad)
        np.add.at(F, idx.ravel(), fe.ravel())

    lifting = lifting_function(u_space, np.asarray(config.bc, dtype=float))
    fixed = 2 * u_space.bc_mask
    keep = np.ones(n, dtype=bool)
    keep[fixed] = False
    free = np.flatnonzero(keep)

    rhs = F[free] - A[free][:, fixed] @ lifting.coeffs[u_space.bc_mask]
    A_ff = A[free][:, free].tocsr()
    coo = A_ff.tocoo()
    kl = int(max(0, (coo.row - coo.col).max()))
    ku = int(max(0, (coo.col - coo.row).max()))
    band = to_band(A_ff, kl, ku)
    system = BandedSystem(u_space, v_space, A_ff, band, kl, ku, rhs, free)
    return system, lifting


def _equilibrate(matrix):
    """Row and column scale factors making every row and column max-norm 1."""
    absA = abs(matrix)
    rmax = np.asarray(absA.max(axis=1).todense()).ravel()
    r = 1.0 / np.where(rmax > 0, rmax, 1.0)
    cmax = np.asarray((sp.diags(r) @ absA).max(axis=0).todense()).ravel()
    c = 1.0 / np.where(cmax > 0, cmax, 1.0)
    return r, c


def _factor(band, kl, ku):
    lu, piv, info = lapack.dgbtrf(band, kl, ku)
    if info > 0:
        raise SingularSystemError(info - 1)
    if info < 0:
        raise ValueError(f"dgbtrf rejected argument {-info}")
    return lu, piv


def _backsolve(lu, piv, kl, ku, b, trans=0):
    x, info = lapack.dgbtrs(lu, kl, ku, np.asarray(b, dtype=float).ravel(), piv, trans=trans)
    if info != 0:
        raise ValueError(f"dgbtrs rejected argument {-info}")
    return x


def inverse_norm1_estimate(n, solve, solve_t, max_iter=5):
    """Hager-Higham estimate of ||A^{-1}||_1 from solves with A and A^T.

    Deterministic: starts from the uniform vector and finishes with
    Higham's alternating-sign test vector.
    """
    x = np.full(n, 1.0 / n)
    est = 0.0
    last = -1
    for _ in range(max_iter):
        y = solve(x)
        est = np.abs(y).sum()
        z = solve_t(np.where(y >= 0, 1.0, -1.0))
        j = int(np.argmax(np.abs(z)))
        if np.abs(z[j]) <= z @ x or j == last:
            break
        x = np.zeros(n)
        x[j] = 1.0
        last = j
    alt = (-1.0) ** np.arange(n) * (1.0 + np.arange(n) / max(n - 1, 1))
    return max(est, 2.0 * np.abs(solve(alt)).sum() / (3.0 * n))


def _condition_estimate(matrix, solve, solve_t):
    norm_a = abs(matrix).sum(axis=0).max()
    return float(norm_a * inverse_norm1_estimate(matrix.shape[0], solve, solve_t))


def _scatter(system, x, lifting):
    full = np.zeros(2 * system.u_space.n_dofs)
    full[system.free] = x
    u = DiscreteFunction(system.u_space, full[0::2] + lifting.coeffs)
    v = DiscreteFunction(system.v_space, full[1::2])
    return u, v


def solve(system, lifting, eps=float("nan"), estimate_condition=True, probe_roundoff=True):
    """Solve the banded system and scatter the result onto (u_h, v_h).

    The operator is row/column equilibrated and factorized by LU with
    partial pivoting inside the band.  With ``probe_roundoff`` the
    unscaled operator is factorized as well; the difference between the two
    solutions is kept as a round-off probe (``DiscreteSolution.roundoff``).
    """
    A, kl, ku = system.matrix, system.kl, system.ku
    r, c = _equilibrate(A)
    scaled = (sp.diags(r) @ A @ sp.diags(c)).tocsr()
    lu, piv = _factor(to_band(scaled, kl, ku), kl, ku)
    x = c * _backsolve(lu, piv, kl, ku, r * system.rhs)

    res = A @ x - system.rhs
    bnorm = np.linalg.norm(system.rhs)
    residual = float(np.linalg.norm(res) / bnorm) if bnorm > 0 else float(np.linalg.norm(res))

    cond = float("nan")
    if estimate_condition:
        cond = _condition_estimate(
            A,
            lambda b: c * _backsolve(lu, piv, kl, ku, r * np.ravel(b)),
            lambda b: r * _backsolve(lu, piv, kl, ku, c * np.ravel(b), trans=1),
        )

    roundoff = None
    if probe_roundoff:
        lu0, piv0 = _factor(system.band, kl, ku)
        x0 = _backsolve(lu0, piv0, kl, ku, system.rhs)
        zero = lifting_function(system.u_space, np.zeros(4))
        roundoff = _scatter(system, x0 - x, zero)

    log.debug("solved %d unknowns, residual %.3e, cond_est %.3e", system.size, residual, cond)
    u_h, v_h = _scatter(system, x, lifting)
    return DiscreteSolution(u_h, v_h, residual, cond, eps, roundoff)


def solve_bvp(config, estimate_condition=True, probe_roundoff=True):
    system, lifting = assemble(config)
    return solve(system, lifting, config.eps, estimate_condition, probe_roundoff)


def _check_same_mesh(*funcs):
    meshes = {id(f.space.mesh) for f in funcs}
    if len(meshes) > 1:
        first = funcs[0].space.mesh.nodes
        if any(
            f.space.mesh.nodes.shape != first.shape or np.any(f.space.mesh.nodes != first)
            for f in funcs[1:]
        ):
            raise ValueError("all functions must live on the same mesh")


def bilinear_B(pair_a, pair_b, eps, lam, n_quad=None):
    """Evaluate B((u, v), (u*, v*)) by element-wise Gauss quadrature."""
    u, v = pair_a
    us, vs = pair_b
    _check_same_mesh(u, v, us, vs)
    p = max(f.space.degree for f in (u, v, us, vs))
    t, jw = _quad_data(u.space.mesh, n_quad or p + 2)
    e32, e52 = _field_factors(eps)
    ua = [u.element_values(t, k) for k in (0, 2)]
    va = [v.element_values(t, k) for k in (0, 2)]
    ub = [us.element_values(t, k) for k in (0, 2)]
    vb = [vs.element_values(t, k) for k in (0, 2)]
    first = (va[0] - e32 * ua[1]) * (vb[0] - e32 * ub[1])
    second = (e52 * va[1] + 4.0 * ua[0]) * (e32 * vb[1] + 4.0 * ub[0])
    return float(np.sum(jw * (lam * first + second)))


def balanced_norm_components(u, v, eps, n_quad=None):
    """Squared terms (||u||^2, eps^3 ||u''||^2, ||v||^2, eps^4 ||v''||^2)."""
    _check_same_mesh(u, v)
    p = max(u.space.degree, v.space.degree)
    t, jw = _quad_data(u.space.mesh, n_quad or p + 2)
    return (
        float(np.sum(jw * u.element_values(t, 0) ** 2)),
        eps**3 * float(np.sum(jw * u.element_values(t, 2) ** 2)),
        float(np.sum(jw * v.element_values(t, 0) ** 2)),
        eps**4 * float(np.sum(jw * v.element_values(t, 2) ** 2)),
    )


def balanced_norm_sq(u, v, eps, n_quad=None):
    """Squared balanced norm of (u, v) and its four components."""
    parts = balanced_norm_components(u, v, eps, n_quad)
    return sum(parts), parts
