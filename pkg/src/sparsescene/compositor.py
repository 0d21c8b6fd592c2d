"""Alpha-blend composition of background and foreground renders.

Single object:   x_final = x_bg * (1 - a) + x_fg * a,  a = sigmoid(a')
Multiple objects combine foregrounds by a per-pixel softmax over the
unscaled transparency logits before the same final blend.

At saturated logits the gradient routes entirely to one side: a' -> +inf
sends it all to the foreground, a' -> -inf to the background.
"""

from __future__ import annotations

import numpy as np


class BlendError(Exception):
    pass


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _check_shapes(x_bg, x_fg, alpha_logit):
    if x_bg.shape != x_fg.shape:
        raise BlendError(f"shape mismatch {x_bg.shape} vs {x_fg.shape}")
    if alpha_logit.shape[-2:] != x_bg.shape[-2:] or alpha_logit.shape[0] != 1:
        raise BlendError("alpha logits must be (1, H, W) matching the images")


def blend(x_bg: np.ndarray, x_fg: np.ndarray, alpha_logit: np.ndarray):
    """Returns (x_final, alpha, cache)."""
    x_bg = np.asarray(x_bg, dtype=np.float64)
    x_fg = np.asarray(x_fg, dtype=np.float64)
    alpha_logit = np.asarray(alpha_logit, dtype=np.float64)
    _check_shapes(x_bg, x_fg, alpha_logit)
    alpha = sigmoid(alpha_logit)
    x_final = x_bg * (1.0 - alpha) + x_fg * alpha
    return x_final, alpha, {"x_bg": x_bg, "x_fg": x_fg, "alpha": alpha}


def blend_backward(cache, dfinal: np.ndarray):
    """Returns (dx_bg, dx_fg, dalpha_logit)."""
    alpha = cache["alpha"]
    dx_bg = dfinal * (1.0 - alpha)
    dx_fg = dfinal * alpha
    dalpha = (dfinal * (cache["x_fg"] - cache["x_bg"])).sum(axis=0, keepdims=True)
    dlogit = dalpha * alpha * (1.0 - alpha)
    return dx_bg, dx_fg, dlogit


def _object_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=0, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=0, keepdims=True)


def blend_multi(x_bg: np.ndarray, x_fgs: list[np.ndarray],
                alpha_logits: list[np.ndarray]):
    """Returns (x_final, cache). N = 0 returns the background unchanged."""
    x_bg = np.asarray(x_bg, dtype=np.float64)
    if len(x_fgs) != len(alpha_logits):
        raise BlendError("foreground/logit list length mismatch")
    if not x_fgs:
        return x_bg.copy(), {"n": 0, "x_bg": x_bg}
    x_fgs = [np.asarray(x, dtype=np.float64) for x in x_fgs]
    logits = [np.asarray(a, dtype=np.float64) for a in alpha_logits]
    for xf, al in zip(x_fgs, logits):
        _check_shapes(x_bg, xf, al)

    stack_l = np.stack([a[0] for a in logits])          # (N, H, W)
    weights = _object_softmax(stack_l)                  # (N, H, W)
    sig = sigmoid(stack_l)
    x_fg = np.einsum("nkhw,nhw->khw", np.stack(x_fgs), weights)
    alpha = (sig * weights).sum(axis=0)[None]           # (1, H, W)
    x_final = x_bg * (1.0 - alpha) + x_fg * alpha
    return x_final, {"n": len(x_fgs), "x_bg": x_bg, "x_fgs": np.stack(x_fgs),
                     "weights": weights, "sig": sig, "x_fg": x_fg,
                     "alpha": alpha}


def blend_multi_backward(cache, dfinal: np.ndarray):
    """Returns (dx_bg, [dx_fg_i], [dalpha_logit_i])."""
    if cache["n"] == 0:
        return dfinal.copy(), [], []
    x_bg, x_fg, alpha = cache["x_bg"], cache["x_fg"], cache["alpha"]
    weights, sig, x_fgs = cache["weights"], cache["sig"], cache["x_fgs"]

    dx_bg = dfinal * (1.0 - alpha)
    dxfg_combined = dfinal * alpha                       # (3, H, W)
    dalpha = (dfinal * (x_fg - x_bg)).sum(axis=0)        # (H, W)

    dx_fgs = np.einsum("khw,nhw->nkhw", dxfg_combined, weights)
    dweights = (np.einsum("khw,nkhw->nhw", dxfg_combined, x_fgs)
                + dalpha[None] * sig)
    dsig = dalpha[None] * weights
    # softmax over objects
    dlog_soft = weights * (dweights - (dweights * weights).sum(axis=0, keepdims=True))
    dlogits = dlog_soft + dsig * sig * (1.0 - sig)
    return (dx_bg,
            [dx_fgs[i] for i in range(cache["n"])],
            [dlogits[i][None] for i in range(cache["n"])])
