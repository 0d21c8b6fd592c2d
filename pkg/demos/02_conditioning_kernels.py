"""Tour of the hand-written differentiable kernels: conditional
normalization blocks, sentence attention, and their gradient checks.

Run:  python3 demos/02_conditioning_kernels.py
"""

import numpy as np

from sparsescene.kernels import (AttentionWeights, CondWeights,
                                 attention_forward, op_counter,
                                 pseudo_encode_sentence, s_block_backward,
                                 s_block_forward)
from sparsescene.verify import fd_grad, rel_err

rng = np.random.default_rng(0)

print("== conditional normalization block ==")
x = rng.standard_normal((1, 4, 8, 8))          # (N, C, H, W) activations
cond = rng.standard_normal((8, 8, 6))          # per-pixel conditioning
w = CondWeights.init(k_in=6, mid=8, channels=4, rng=rng)
y, cache = s_block_forward(x, cond, w)
print(f"y = BN(x) * (1 + gamma) + beta   -> output {y.shape}")
print(f"per-channel output mean {y.mean(axis=(0, 2, 3)).round(3)}")

r = rng.standard_normal(y.shape)
dx, dcond, _ = s_block_backward(cache, r)
err = rel_err(dx, fd_grad(
    lambda v: float((s_block_forward(v, cond, w)[0] * r).sum()), x))
print(f"backward vs central finite differences: rel err {err:.2e}")

print("\n== sentence attention ==")
tok = pseudo_encode_sentence("a rusty red car next to a leafless tree",
                             d_lm=64)
aw = AttentionWeights.init(num_classes=4, d_lm=64, heads=6, rng=rng)
op_counter.reset()
ctx, attn, _ = attention_forward(tok, aw)
print(f"{tok.shape[0]} tokens -> per-class contexts {ctx.shape}, "
      f"attention {attn.shape}")
print(f"rows sum to 1: max deviation {abs(attn.sum(-1) - 1).max():.1e}")
print(f"multiply-adds: {op_counter.ops:,} -- a function of token and class"
      " counts only, never of the raster resolution")

print("\nclass 1, head 0 token weights:")
for i, weight in enumerate(attn[1, 0]):
    print(f"  token {i:2d}  {'#' * int(weight * 60):<15s} {weight:.3f}")
