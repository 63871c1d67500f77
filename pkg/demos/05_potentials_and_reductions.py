"""
Potentials for curl-free / divergence-free fields, and the two scalar reductions.
=================================================================================

The reductions rebuild a curl-curl solution from scalar elliptic solves and
report the residual of every identity they rely on.
"""

# %%
import numpy as np

from curlhomog import maxwell, potentials
from curlhomog.coeff import make_family
from curlhomog.harness import catalog
from curlhomog.mesh import EdgeField, FaceField, build_grid

rng = np.random.default_rng(0)
g = build_grid(0.0, 1.0, 12)
gf = FaceField(g, g.curl @ rng.standard_normal(g.n_edges))
vp = potentials.vector_potential(gf)
print(f"vector potential: |curl h - g|/|g| = {vp.curl_residual:.1e}, shell iterations {vp.diagnostics['shell_iterations']}")
sp_ = potentials.gradient_potential(EdgeField(g, g.grad @ rng.standard_normal(g.n_nodes)))
print(f"scalar potential: |grad P - u|/|u| = {sp_.residual:.1e}")

lam = make_family("laminate", [2.0, 1.0])
g = build_grid(0.0, 0.5, 16)
F, G, f = catalog.make_data("smooth", g)
prob = maxwell.MaxwellProblem(g, lam, lam, 0.125, F, G, f, 1e-12)
sol = maxwell.assemble_solve(prob)
for fn in (potentials.reduce_lemma31, potentials.reduce_lemma32):
    t = fn(sol, prob)
    print(f"\n{t.pipeline}: passed={t.passed}")
    for k, c in t.residuals.items():
        print(f"  {k:<40} {c.value:.2e}  (tol {c.tol:.1e})")
    print(f"  norm-chain constant {t.norms['constant']:.3f}")
