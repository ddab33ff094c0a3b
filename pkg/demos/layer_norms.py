"""
Why a balanced norm
===================

The standard energy norm sqrt(eps^4 ||u''||^2 + 4 ||u||^2) of the layer
exp(-x/eps) cos(x/eps) vanishes like eps^(1/2), so it barely notices the
layer.  The balanced norm of (u, eps^(3/2) u'') stays of order one.
"""

from shellfem import exact_norms, layer_function

for eps in (1e-1, 1e-2, 1e-3, 1e-4, 1e-5):
    standard, balanced = exact_norms(layer_function(eps))
    print(f"eps={eps:7.0e}  standard={standard:.4e}  balanced={balanced:.4f}")
