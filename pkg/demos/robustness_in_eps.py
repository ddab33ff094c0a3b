"""
Robustness in eps
=================

Fix N = 16 and let eps run from 1 down to e^-10.  The balanced-norm terms
settle to constants; the plain L2 error of u keeps shrinking because the
layer gets thinner.
"""

import math

from shellfem import (
    ProblemConfig,
    error_norms,
    manufactured_bc,
    manufactured_solution,
    shishkin_one_sided,
    solve_bvp,
)

print(f"{'eps':>10} {'err_u_L2':>10} {'err_u_dd':>10} {'err_v_dd':>10} {'balanced':>10}")
for k in range(11):
    eps = math.exp(-k)
    exact = manufactured_solution(eps)
    mesh = shishkin_one_sided(16, 4.0, eps)
    sol = solve_bvp(ProblemConfig(eps, mesh, load=exact.f, bc=manufactured_bc(exact)))
    r = error_norms(sol, exact)
    print(f"{eps:10.3e} {r.err_u_L2:10.3e} {r.err_u_dd:10.3e} {r.err_v_dd:10.3e} {r.balanced:10.3e}")
