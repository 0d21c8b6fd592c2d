"""Alpha blending: single- and multi-object composition, gradient
routing at saturated transparencies, and the loss-weight schedule.

Run:  python3 demos/03_blending.py
"""

import numpy as np

from sparsescene.compositor import (blend, blend_backward, blend_multi,
                                    blend_multi_backward)
from sparsescene.kernels.schedule import alpha_loss_weight

rng = np.random.default_rng(0)
x_bg = rng.standard_normal((3, 4, 4))
x_fg = rng.standard_normal((3, 4, 4))

print("== single object ==")
for logit in (-40.0, 0.0, 40.0):
    y, alpha, _ = blend(x_bg, x_fg, np.full((1, 4, 4), logit))
    side = {-40.0: "background", 0.0: "50/50 mix", 40.0: "foreground"}[logit]
    print(f"  logit {logit:+5.0f} -> alpha {alpha[0, 0, 0]:.3f}  ({side})")

print("\n== gradient routing ==")
r = rng.standard_normal(x_bg.shape)
for logit, label in ((40.0, "foreground"), (-40.0, "background")):
    _, _, cache = blend(x_bg, x_fg, np.full((1, 4, 4), logit))
    dbg, dfg, _ = blend_backward(cache, r)
    print(f"  logit {logit:+5.0f}: |d x_bg| {np.abs(dbg).max():.1e}  "
          f"|d x_fg| {np.abs(dfg).max():.1e}  -> all to the {label}")

print("\n== three overlapping objects ==")
x_fgs = [rng.standard_normal((3, 4, 4)) for _ in range(3)]
logits = [rng.standard_normal((1, 4, 4)) for _ in range(3)]
y, cache = blend_multi(x_bg, x_fgs, logits)
print(f"object softmax weights sum to 1: max deviation "
      f"{abs(cache['weights'].sum(axis=0) - 1).max():.1e}")
dbg, dfgs, dlogits = blend_multi_backward(cache, r)
print(f"backward returns {len(dfgs)} foreground grads and "
      f"{len(dlogits)} logit grads")

print("\n== transparency loss-weight schedule ==")
for t in (0, 1000, 10000, 23022, 23023, 50000):
    print(f"  step {t:6d}: weight {alpha_loss_weight(t):.4f}")
print("decays from 10 by 0.9997 per step; clamps at 0.01 from step 23023")
