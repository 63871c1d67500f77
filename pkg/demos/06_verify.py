"""
Run the self-audit and show the effect of a deliberately broken curl.
=====================================================================

``inject_fault: orientation`` flips the sign of one family of curl columns;
curl(grad) = 0 and the boundary identity must then fail, while div(curl) = 0
survives (it is insensitive to that fault).
"""

# %%
from curlhomog.harness import config
from curlhomog.harness.verify import run_verify

for fault in (None, "orientation"):
    rep = run_verify(config.from_dict({"verify": {"ladder": [8, 16], "inject_fault": fault}}))
    print(f"fault={fault}: {len(rep.checks)} checks, passed={rep.passed}")
    for c in (c for c in rep.checks if not c.passed):
        print(f"   FAILED {c.name}: {c.value:.3g} (threshold {c.threshold:g})")
