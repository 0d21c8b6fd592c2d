"""Sentence-to-class multi-head attention.

One learned query per class (per head) attends over token keys/values,
yielding a contextualized 64-d embedding per class. There is no spatial
argument anywhere, so the cost depends only on (n, c, heads, head_dim);
an instrumented multiply-add counter makes that assertable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HEAD_DIM = 64
OUT_DIM = 64


class OpCounter:
    def __init__(self):
        self.ops = 0

    def reset(self):
        self.ops = 0


op_counter = OpCounter()


@dataclass
class AttentionWeights:
    """queries: (c+1, H, h); w_k/w_v: (H, d_lm, h); w_o: (H*h, 64)."""
    queries: np.ndarray
    w_k: np.ndarray
    w_v: np.ndarray
    w_o: np.ndarray

    def __post_init__(self):
        heads = self.queries.shape[1]
        if heads not in (6, 12):
            raise ValueError("use 6 or 12 attention heads")
        if self.queries.shape[2] != HEAD_DIM:
            raise ValueError(f"head size must be {HEAD_DIM}")

    @property
    def heads(self) -> int:
        return self.queries.shape[1]

    @classmethod
    def init(cls, num_classes: int, d_lm: int, heads: int,
             rng: np.random.Generator) -> "AttentionWeights":
        u = lambda *s: rng.uniform(-0.02, 0.02, s)
        return cls(
            queries=u(num_classes + 1, heads, HEAD_DIM),
            w_k=u(heads, d_lm, HEAD_DIM),
            w_v=u(heads, d_lm, HEAD_DIM),
            w_o=u(heads * HEAD_DIM, OUT_DIM),
        )


def softmax_rows(s: np.ndarray) -> np.ndarray:
    z = s - s.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def attention_forward(tok: np.ndarray, w: AttentionWeights):
    """tok: (n, d_lm) token embeddings (delimiters included).

    Returns (ctx (c+1, 64), weights (c+1, H, n), cache).
    """
    tok = np.asarray(tok, dtype=np.float64)
    if tok.ndim != 2 or len(tok) < 1:
        raise ValueError("token embeddings must be a non-empty (n, d) array")
    if not np.isfinite(tok).all():
        raise ValueError("non-finite token embeddings")
    cq, heads, h = w.queries.shape
    n = tok.shape[0]
    scale = 1.0 / np.sqrt(h)

    keys = np.einsum("nd,edh->enh", tok, w.w_k)    # (H, n, h)
    vals = np.einsum("nd,edh->enh", tok, w.w_v)
    scores = np.einsum("ceh,enh->cen", w.queries, keys) * scale  # (c+1, H, n)
    attn = softmax_rows(scores)
    head_out = np.einsum("cen,enh->ceh", attn, vals)  # (c+1, H, h)
    concat = head_out.reshape(cq, heads * h)
    ctx = concat @ w.w_o

    d_lm = tok.shape[1]
    op_counter.ops += 2 * n * d_lm * heads * h      # key/value projections
    op_counter.ops += 2 * cq * heads * n * h        # scores + pooling
    op_counter.ops += cq * heads * h * OUT_DIM      # output projection

    cache = {"tok": tok, "keys": keys, "vals": vals, "attn": attn,
             "concat": concat, "w": w}
    return ctx, attn, cache


def attention_backward(cache, dctx: np.ndarray):
    """Returns (dtok, dweights)."""
    w: AttentionWeights = cache["w"]
    tok, keys, vals, attn = (cache["tok"], cache["keys"],
                             cache["vals"], cache["attn"])
    cq, heads, h = w.queries.shape
    scale = 1.0 / np.sqrt(h)

    dw_o = cache["concat"].T @ dctx
    dconcat = dctx @ w.w_o.T
    dhead = dconcat.reshape(cq, heads, h)

    dattn = np.einsum("ceh,enh->cen", dhead, vals)
    dvals = np.einsum("cen,ceh->enh", attn, dhead)
    # softmax jacobian per row
    dscores = attn * (dattn - (dattn * attn).sum(axis=-1, keepdims=True))
    dscores *= scale
    dq = np.einsum("cen,enh->ceh", dscores, keys)
    dkeys = np.einsum("cen,ceh->enh", dscores, w.queries)
    dw_k = np.einsum("nd,enh->edh", tok, dkeys)
    dw_v = np.einsum("nd,enh->edh", tok, dvals)
    dtok = (np.einsum("enh,edh->nd", dkeys, w.w_k)
            + np.einsum("enh,edh->nd", dvals, w.w_v))
    dw = AttentionWeights.__new__(AttentionWeights)
    dw.queries, dw.w_k, dw.w_v, dw.w_o = dq, dw_k, dw_v, dw_o
    return dtok, dw


def concat_captions(captions: list[np.ndarray]) -> np.ndarray:
    """Row-wise concatenation of per-caption token embeddings."""
    if not captions:
        raise ValueError("no captions to concatenate")
    widths = {c.shape[1] for c in captions}
    if len(widths) != 1:
        raise ValueError("caption embedding widths differ")
    return np.concatenate(captions, axis=0)
