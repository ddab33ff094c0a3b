"""Balanced-norm mixed finite elements for eps^4 u'''' + 4u = f on (0, 1)
with clamped ends, on layer-adapted Shishkin meshes."""

__version__ = "0.1.0"

from .analysis import (
    ErrorReport,
    ExactSolution,
    analytic_clamped_solution,
    error_norms,
    estimate_orders,
    exact_norms,
    layer_function,
    manufactured_bc,
    manufactured_solution,
    roundoff_report,
)
from .mesh import Mesh, MeshKind, build_mesh, shishkin_one_sided, shishkin_two_sided, uniform
from .quadrature import QuadRule, gauss_legendre
from .spline import (
    DiscreteFunction,
    SplineSpace,
    build_space,
    eval_basis,
    eval_function,
    interpolate,
)
from .system import (
    BandedSystem,
    DiscreteSolution,
    ProblemConfig,
    SingularSystemError,
    assemble,
    balanced_norm_sq,
    bilinear_B,
    solve,
    solve_bvp,
)
