"""
Convergence on Shishkin meshes
==============================

Solve eps^4 u'''' + 4u = f with the layer solution
u(x) = exp(-x/eps) cos(x/eps) + exp(x) and watch the four terms of the
balanced error shrink as the mesh is refined.
"""

import numpy as np

from shellfem import (
    ProblemConfig,
    error_norms,
    estimate_orders,
    manufactured_bc,
    manufactured_solution,
    shishkin_one_sided,
    solve_bvp,
)

eps = 1e-2
exact = manufactured_solution(eps)
bc = manufactured_bc(exact)

# The layer sits at x = 0 only, so a one-sided Shishkin mesh is enough.
Ns = [4 * 2**k for k in range(8)]
reports = []
for N in Ns:
    mesh = shishkin_one_sided(N, sigma=4.0, eps=eps)
    sol = solve_bvp(ProblemConfig(eps, mesh, load=exact.f, bc=bc, degree=3))
    reports.append(error_norms(sol, exact))
    print(f"N={N:4d}  tau={mesh.tau:.4f}  balanced={reports[-1].balanced:.3e}")

# Orders are measured against ln N / N.  The curvature terms converge like
# (ln N / N)^2 and the L2 terms superconverge like (ln N / N)^4.
for col in ("err_u_L2", "err_u_dd", "err_v_L2", "err_v_dd"):
    est = estimate_orders([(N, getattr(r, col)) for N, r in zip(Ns, reports)])
    print(col, np.round(est.steps, 2))
