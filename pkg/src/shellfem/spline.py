"""C1 spline spaces of degree p >= 3 on a mesh, and the local interpolant.

Each element carries p+1 local basis functions, written in the reference
coordinate t in [0, 1]:

    0: value at the left node      (Hermite cubic)
    1: slope at the left node      (Hermite cubic, scaled by h)
    2 .. p-2: interior bubbles t^2 (1-t)^2 P_{j-1}(2t-1)
    p-1: value at the right node   (Hermite cubic)
    p: slope at the right node     (Hermite cubic, scaled by h)

Slope DOFs hold physical derivatives, so C1 coupling across elements of
different width is a plain shared DOF.  Global numbering runs left to
right: node i owns DOFs i(p-1) and i(p-1)+1, and the bubbles of element e
sit in between at e(p-1)+2 ... e(p-1)+p-2.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial import legendre as npleg

from .mesh import Mesh
from .quadrature import gauss_legendre


@lru_cache(maxsize=None)
def reference_basis(p):
    """Local basis as a tuple of ``Polynomial`` objects in t."""
    if p < 3:
        raise ValueError(f"degree must be >= 3, got {p}")
    t = Polynomial([0.0, 1.0])
    h0 = 1 - 3 * t**2 + 2 * t**3
    h1 = t - 2 * t**2 + t**3
    h2 = 3 * t**2 - 2 * t**3
    h3 = -(t**2) + t**3
    bubbles = []
    for j in range(p - 3):
        leg = Polynomial(npleg.leg2poly([0.0] * j + [1.0]))
        bubbles.append(t**2 * (1 - t) ** 2 * leg(2 * t - 1))
    return (h0, h1, *bubbles, h2, h3)


@lru_cache(maxsize=None)
def _slope_mask(p):
    mask = np.zeros(p + 1, dtype=bool)
    mask[[1, p]] = True
    mask.setflags(write=False)
    return mask


def reference_tables(p, t):
    """Values and first/second t-derivatives of the local basis.

    Returns an array of shape (3, p+1, len(t)).
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    basis = reference_basis(p)
    out = np.empty((3, p + 1, t.size))
    for i, phi in enumerate(basis):
        out[0, i] = phi(t)
        out[1, i] = phi.deriv(1)(t)
        out[2, i] = phi.deriv(2)(t)
    return out


@dataclass(frozen=True, eq=False)
class SplineSpace:
    mesh: Mesh
    degree: int
    clamped: bool = False

    def __post_init__(self):
        if self.degree < 3:
            raise ValueError(f"degree must be >= 3, got {self.degree}")

    @property
    def n_elements(self):
        return self.mesh.n_elements

    @property
    def n_dofs(self):
        return self.n_elements * (self.degree - 1) + 2

    @property
    def n_local(self):
        return self.degree + 1

    @property
    def dof_map(self):
        """(N, p+1) array of global DOF indices per element."""
        p = self.degree
        start = np.arange(self.n_elements)[:, None] * (p - 1)
        return start + np.arange(p + 1)[None, :]

    @property
    def bc_mask(self):
        """Global DOFs fixed by clamped boundary data (empty if not clamped)."""
        if not self.clamped:
            return np.array([], dtype=int)
        n = self.n_dofs
        return np.array([0, 1, n - 2, n - 1])

    @property
    def free_dofs(self):
        keep = np.ones(self.n_dofs, dtype=bool)
        keep[self.bc_mask] = False
        return np.flatnonzero(keep)

    def node_dofs(self, i):
        """(value, slope) global DOFs of mesh node ``i``."""
        k = i * (self.degree - 1)
        return k, k + 1

    def basis_tables(self, t):
        """Physical basis values and x-derivatives on every element.

        ``t`` are reference points in [0, 1].  Returns an array of shape
        (3, N, p+1, len(t)).
        """
        ref = reference_tables(self.degree, t)
        h = self.mesh.widths[:, None, None]
        scale = np.where(_slope_mask(self.degree)[None, :, None], h, 1.0)
        out = np.empty((3,) + (self.n_elements,) + ref.shape[1:])
        out[0] = ref[0][None] * scale
        out[1] = ref[1][None] * scale / h
        out[2] = ref[2][None] * scale / h**2
        return out

    def locate(self, x):
        """Element index and reference coordinate for points ``x``.

        A point on an interior node belongs to the element on its right;
        x = 1 belongs to the last element.
        """
        x = np.asarray(x, dtype=float)
        if np.any((x < 0.0) | (x > 1.0)):
            raise ValueError("evaluation points must lie in [0, 1]")
        nodes = self.mesh.nodes
        e = np.searchsorted(nodes, x, side="right") - 1
        e = np.clip(e, 0, self.n_elements - 1)
        h = nodes[e + 1] - nodes[e]
        return e, (x - nodes[e]) / h


def build_space(mesh, p, clamped=False):
    return SplineSpace(mesh, int(p), bool(clamped))


def eval_basis(space, element, t):
    """Local basis on one element at reference point ``t``.

    Returns a (p+1, 3) array of value, first and second physical derivative.
    """
    if not 0 <= element < space.n_elements:
        raise IndexError(f"element {element} out of range [0, {space.n_elements})")
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"reference point must lie in [0, 1], got {t}")
    ref = reference_tables(space.degree, [t])[:, :, 0]
    h = space.mesh.widths[element]
    scale = np.where(_slope_mask(space.degree), h, 1.0)
    return np.stack([ref[0] * scale, ref[1] * scale / h, ref[2] * scale / h**2], axis=1)


@dataclass(frozen=True, eq=False)
class DiscreteFunction:
    space: SplineSpace
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=float)
        if coeffs.shape != (self.space.n_dofs,):
            raise ValueError(
                f"expected {self.space.n_dofs} coefficients, got shape {coeffs.shape}"
            )
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def local_coeffs(self):
        """(N, p+1) coefficients gathered per element."""
        return self.coeffs[self.space.dof_map]

    def __call__(self, x, deriv=0):
        return eval_function(self, x, deriv)

    def element_values(self, t, deriv=0):
        """Values (or x-derivatives) at reference points ``t`` on every element, shape (N, len(t))."""
        tables = self.space.basis_tables(t)[deriv]
        return np.einsum("ei,eiq->eq", self.local_coeffs, tables)

    def __add__(self, other):
        return DiscreteFunction(self.space, self.coeffs + other.coeffs)

    def __sub__(self, other):
        return DiscreteFunction(self.space, self.coeffs - other.coeffs)

    def __mul__(self, s):
        return DiscreteFunction(self.space, s * self.coeffs)

    __rmul__ = __mul__


def zero_function(space):
    return DiscreteFunction(space, np.zeros(space.n_dofs))


def eval_function(f, x, deriv=0):
    """Evaluate a spline or its first or second derivative at ``x``."""
    if deriv not in (0, 1, 2):
        raise ValueError(f"deriv must be 0, 1 or 2, got {deriv}")
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    space = f.space
    e, t = space.locate(x)
    p = space.degree
    ref = reference_tables(p, t)[deriv]  # (p+1, len(x))
    h = space.mesh.widths[e]
    scale = np.where(_slope_mask(p)[:, None], h[None, :], 1.0) / h[None, :] ** deriv
    vals = np.einsum("ki,ik->k", f.local_coeffs[e], ref * scale)
    return float(vals[0]) if scalar else vals


def local_interpolant(a, b, p, w, dw, d2w, n_quad=None):
    """Element polynomial of degree p matching w, w' at ``a`` whose second
    derivative is the L2 projection of w'' onto P_{p-2}.

    Returns a ``Polynomial`` in the reference coordinate t = (x - a) / h.
    """
    h = b - a
    rule = gauss_legendre(n_quad or p + 3)
    s, wts = rule.points, rule.weights
    x = a + 0.5 * h * (s + 1.0)
    ddw = np.asarray(d2w(x), dtype=float)
    k = np.arange(p - 1)
    legvals = npleg.legvander(s, p - 2)  # (nq, p-1)
    coef = (2 * k + 1) / 2.0 * ((wts * ddw) @ legvals)
    # projected w'' as a polynomial in s, then in t via s = 2t - 1
    proj_s = Polynomial(npleg.leg2poly(coef))
    proj_t = proj_s(Polynomial([-1.0, 2.0]))
    slope = h * proj_t.integ(lbnd=0.0) + float(dw(a))
    return h * slope.integ(lbnd=0.0) + float(w(a))


def interpolate(space, w, dw, d2w):
    """Apply the local interpolant element by element, left to right.

    The left-endpoint data of element 0 is taken from ``w``; every later
    node takes value and slope from the right end of the element on its
    left.  For p >= 3 those coincide with w(x_i), w'(x_i) up to quadrature
    error, which is what makes the result C1.
    """
    p = space.degree
    nodes = space.mesh.nodes
    basis = reference_basis(p)
    coeffs = np.zeros(space.n_dofs)
    # collocation matrix for bubble coefficients
    tc = np.linspace(0.0, 1.0, p + 3)[1:-1]
    bub = np.array([phi(tc) for phi in basis[2:p - 1]]).T
    for e in range(space.n_elements):
        a, b = nodes[e], nodes[e + 1]
        h = b - a
        poly = local_interpolant(a, b, p, w, dw, d2w)
        dpoly = poly.deriv()
        va, sa = poly(0.0), dpoly(0.0) / h
        vb, sb = poly(1.0), dpoly(1.0) / h
        i0, i1 = space.node_dofs(e)
        if e == 0:
            coeffs[i0], coeffs[i1] = va, sa
        j0, j1 = space.node_dofs(e + 1)
        coeffs[j0], coeffs[j1] = vb, sb
        if p > 3:
            hermite = (
                va * basis[0](tc) + h * sa * basis[1](tc)
                + vb * basis[p - 1](tc) + h * sb * basis[p](tc)
            )
            beta, *_ = np.linalg.lstsq(bub, poly(tc) - hermite, rcond=None)
            coeffs[i1 + 1 : i1 + p - 2] = beta
    return DiscreteFunction(space, coeffs)
