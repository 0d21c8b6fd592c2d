"""Small end-to-end render path used for previews and verification:
semantic + style conditioning maps feed two stacked conditional-norm
blocks over a learned constant input, followed by a 1x1 projection to
RGB. No parameter depends on the raster resolution."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attention import AttentionWeights, attention_forward
from .blocks import CondWeights, s_block_backward, s_block_forward
from .checkpoint import load_tensors, save_tensors
from .conv import relu, relu_backward
from .embeddings import (apply_contextualized, attribute_embed, class_embed,
                         class_embed_backward)
from .encoder import DEFAULT_D_LM

EMBED_DIM = 64


@dataclass
class ToyWeights:
    e_cls: np.ndarray      # (c+1, 64)
    e_attr: np.ndarray     # (n_attr, 64)
    block1: CondWeights    # K = 128 in
    block2: CondWeights
    x0: np.ndarray         # (C,) learned per-channel constant input
    proj: np.ndarray       # (C, 3)
    attention: AttentionWeights

    @classmethod
    def init(cls, num_classes: int, n_attr: int, seed: int = 0,
             channels: int = 8, mid: int = 16, heads: int = 6,
             d_lm: int = DEFAULT_D_LM) -> "ToyWeights":
        rng = np.random.default_rng(seed)
        u = lambda *s: rng.uniform(-0.02, 0.02, s)
        return cls(
            e_cls=u(num_classes + 1, EMBED_DIM),
            e_attr=u(n_attr, EMBED_DIM),
            block1=CondWeights.init(2 * EMBED_DIM, mid, channels, rng),
            block2=CondWeights.init(2 * EMBED_DIM, mid, channels, rng),
            x0=u(channels),
            proj=u(channels, 3),
            attention=AttentionWeights.init(num_classes, d_lm, heads, rng),
        )

    @property
    def channels(self) -> int:
        return self.x0.shape[0]

    def to_tensors(self) -> dict[str, np.ndarray]:
        out = {"e_cls": self.e_cls, "e_attr": self.e_attr,
               "x0": self.x0, "proj": self.proj,
               "attn.queries": self.attention.queries,
               "attn.w_k": self.attention.w_k,
               "attn.w_v": self.attention.w_v,
               "attn.w_o": self.attention.w_o}
        for name, blk in (("block1", self.block1), ("block2", self.block2)):
            out[f"{name}.conv1"] = blk.conv1
            out[f"{name}.conv_gamma"] = blk.conv_gamma
            out[f"{name}.conv_beta"] = blk.conv_beta
        return out

    def save(self) -> bytes:
        return save_tensors(self.to_tensors())

    @classmethod
    def load(cls, data: bytes) -> "ToyWeights":
        t = load_tensors(data)
        blocks = [CondWeights(conv1=t[f"{n}.conv1"],
                              conv_gamma=t[f"{n}.conv_gamma"],
                              conv_beta=t[f"{n}.conv_beta"])
                  for n in ("block1", "block2")]
        return cls(e_cls=t["e_cls"], e_attr=t["e_attr"],
                   block1=blocks[0], block2=blocks[1],
                   x0=t["x0"], proj=t["proj"],
                   attention=AttentionWeights(
                       queries=t["attn.queries"], w_k=t["attn.w_k"],
                       w_v=t["attn.w_v"], w_o=t["attn.w_o"]))


def style_map(class_map: np.ndarray, w: ToyWeights,
              attr_plane=None, tokens: np.ndarray | None = None) -> np.ndarray:
    """64-d per-pixel style channel from attributes or caption tokens."""
    if tokens is not None:
        ctx, _, _ = attention_forward(tokens, w.attention)
        return apply_contextualized(class_map, ctx)
    if attr_plane is not None:
        return attribute_embed(attr_plane, w.e_attr)
    h, wd = class_map.shape
    return np.zeros((h, wd, EMBED_DIM))


def toy_forward(class_map: np.ndarray, w: ToyWeights,
                attr_plane=None, tokens: np.ndarray | None = None,
                with_cache: bool = False):
    """class_map (H, W) -> RGB (3, H, W), deterministic for fixed weights."""
    sem = class_embed(class_map, w.e_cls)
    sty = style_map(class_map, w, attr_plane=attr_plane, tokens=tokens)
    cond = np.concatenate([sem, sty], axis=2)  # (H, W, 128)

    h, wd = class_map.shape
    x = np.broadcast_to(w.x0[None, :, None, None],
                        (1, w.channels, h, wd)).copy()
    y1, c1 = s_block_forward(x, cond, w.block1)
    a1 = relu(y1)
    y2, c2 = s_block_forward(a1, cond, w.block2)
    rgb = np.einsum("nchw,ck->knhw", y2, w.proj)[:, 0]  # (3, H, W)
    if with_cache:
        return rgb, {"c1": c1, "c2": c2, "y1": y1, "y2": y2,
                     "cond": cond, "class_map": class_map, "w": w}
    return rgb


def toy_backward(cache, drgb: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients for the embedding tables and block weights (style path
    taken as attributes/zero; attention grads are exercised separately)."""
    w: ToyWeights = cache["w"]
    dy2 = np.einsum("khw,ck->chw", drgb, w.proj)[None]
    dproj = np.einsum("chw,khw->ck", cache["y2"][0], drgb)
    da1, dcond2, dw2 = s_block_backward(cache["c2"], dy2)
    dy1 = relu_backward(cache["y1"], da1)
    dx, dcond1, dw1 = s_block_backward(cache["c1"], dy1)
    dcond = dcond1 + dcond2
    dsem = dcond[:, :, :EMBED_DIM]
    de_cls = class_embed_backward(cache["class_map"], w.e_cls.shape[0], dsem)
    dx0 = dx.sum(axis=(0, 2, 3))
    return {"e_cls": de_cls, "x0": dx0, "proj": dproj,
            "block1": dw1, "block2": dw2,
            "cond": dcond}
