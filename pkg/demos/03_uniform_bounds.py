"""
Do the solution norms stay bounded as the period shrinks?
=========================================================

R_p(eps) = (|u|_p + |curl u|_p) / (data norms) for a laminate pair at
eps = 1/4, 1/8, 1/16 with h = eps/8.  A spread max/min <= 2 is read as
"bounded uniformly in eps".
"""

# %%
from curlhomog.harness import config, experiments as ex

res = ex.run_sweep(config.from_dict({"p": [2, 4, "inf"], "threads": 2}))
for r in res.rows:
    print(f"eps={r['eps']:<7} p={ex.fmt(r['p']):>3}  R={r['ratio']:.4f}  iters={r['iters']}")
for p, s in res.summary.items():
    print(f"p={p:>3}: spread {s['spread']:.3f} -> {s['verdict']}")
