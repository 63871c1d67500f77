"""
Solve a curl-curl problem with a closed-form solution and watch the error halve.
================================================================================

A = B = I, u = (0, 0, sin(pi x) sin(pi y)) on the unit cube.  The tangential
trace is imposed strongly, so it is exact on every grid.
"""

# %%
import numpy as np

from curlhomog import maxwell
from curlhomog.harness import catalog
from curlhomog.mesh import EdgeField, build_grid
from curlhomog.norms import lp_norm

I3 = np.eye(3)
prev = None
for n in (8, 16, 32):
    g = build_grid(0.0, 1.0, n)
    F, G, f = catalog.make_data("manufactured", g)
    s = maxwell.assemble_solve(maxwell.MaxwellProblem(g, I3, I3, None, F, G, f, 1e-12))
    err = lp_norm(s.u - EdgeField.from_function(g, catalog.exact_solution("manufactured", g)), 2)
    rate = "" if prev is None else f"  order {np.log2(prev / err):.2f}"
    print(f"n={n:3d}  iterations {s.iterations:4d}  L2 error {err:.3e}{rate}  "
          f"boundary identity gap {maxwell.boundary_identity_gap(s.u):.1e}")
    prev = err
