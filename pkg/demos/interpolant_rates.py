"""
The C1 spline interpolant
=========================

The local interpolant matches w and w' at the element's left end and
projects w'' onto P_{p-2}.  Stitched together it is C1, hits w and w' at
every node, and converges at rate p+1 in L2 and p-1 for the second
derivative.
"""

import numpy as np

from shellfem import build_space, interpolate, uniform

w = (lambda x: np.sin(np.pi * x),
     lambda x: np.pi * np.cos(np.pi * x),
     lambda x: -np.pi**2 * np.sin(np.pi * x))

x = np.linspace(0, 1, 4001)
for p in (3, 4, 5):
    errs = []
    for N in (8, 16, 32, 64):
        iw = interpolate(build_space(uniform(N), p), *w)
        nodes = iw.space.mesh.nodes
        assert np.allclose(iw(nodes), w[0](nodes), atol=1e-10)
        errs.append([np.abs(iw(x) - w[0](x)).max(), np.abs(iw(x, 2) - w[2](x)).max()])
    errs = np.array(errs)
    print(f"p={p}  rates u: {np.log2(errs[:-1, 0] / errs[1:, 0]).round(2)}"
          f"  u'': {np.log2(errs[:-1, 1] / errs[1:, 1]).round(2)}")
