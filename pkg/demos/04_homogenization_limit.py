"""
The eps-solution approaches the homogenized one; the wrong effective tensors do not.
====================================================================================

Data: F = (0, 0, sin(pi s1) sin(2 pi s2)), laminate pair.  The control swaps
A0 and B0, which must break convergence.
"""

# %%
from curlhomog.harness import config, experiments as ex

cfg = config.from_dict({"data": {"name": "zdirected", "params": {"modes": [1, 2]}},
                        "converge": {"negative_control": True}})
res = ex.run_convergence(cfg)
for r in res.rows:
    print(f"{r['variant']:<12} eps={r['eps']:<7} rel error {r['rel_error']:.4e}")
print("orders:", [round(o, 3) for o in res.orders], "->", res.verdict)
print("control orders:", [round(o, 3) for o in res.control["orders"]], "->", res.control["verdict"])
