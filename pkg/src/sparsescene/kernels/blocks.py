"""Conditional-normalization blocks.

The plain block computes gain/bias maps from a semantic conditioning map
via conv -> ReLU -> conv, then applies

    y = BN(x) * (1 + gamma) + beta

with parameter-free per-channel batch statistics (eps = 1e-5). The
averaged variant adds a second path over the full map whose gain/bias
are globally average-pooled before use, so the extra conditioning can
bias the output but not localize:

    y = BN(x) * (1 + gamma + gamma_avg) + beta + beta_avg
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conv import conv2d, conv2d_backward, relu, relu_backward

BN_EPS = 1e-5


@dataclass
class CondWeights:
    """conv1: (3,3,K,mid); conv_gamma/conv_beta: (3,3,mid,C)."""
    conv1: np.ndarray
    conv_gamma: np.ndarray
    conv_beta: np.ndarray

    @classmethod
    def init(cls, k_in: int, mid: int, channels: int,
             rng: np.random.Generator) -> "CondWeights":
        return cls(
            conv1=rng.normal(0.0, 0.02, (3, 3, k_in, mid)),
            conv_gamma=rng.normal(0.0, 0.02, (3, 3, mid, channels)),
            conv_beta=rng.normal(0.0, 0.02, (3, 3, mid, channels)),
        )

    def zeroed_output(self) -> "CondWeights":
        return CondWeights(conv1=self.conv1,
                           conv_gamma=np.zeros_like(self.conv_gamma),
                           conv_beta=np.zeros_like(self.conv_beta))


def _cond_path(cond: np.ndarray, w: CondWeights):
    """cond (H, W, K) -> gamma, beta (H, W, C) with cached intermediates."""
    m = conv2d(cond, w.conv1)
    r = relu(m)
    gamma = conv2d(r, w.conv_gamma)
    beta = conv2d(r, w.conv_beta)
    return gamma, beta, (cond, m, r)


def _cond_path_backward(cache, w: CondWeights, dgamma, dbeta):
    cond, m, r = cache
    dr_g, dwg = conv2d_backward(r, w.conv_gamma, dgamma)
    dr_b, dwb = conv2d_backward(r, w.conv_beta, dbeta)
    dm = relu_backward(m, dr_g + dr_b)
    dcond, dw1 = conv2d_backward(cond, w.conv1, dm)
    return dcond, CondWeights(conv1=dw1, conv_gamma=dwg, conv_beta=dwb)


def batchnorm(x: np.ndarray):
    """x (N, C, H, W) -> normalized x plus cache (mu, var, xhat)."""
    mu = x.mean(axis=(0, 2, 3), keepdims=True)
    var = x.var(axis=(0, 2, 3), keepdims=True)
    xhat = (x - mu) / np.sqrt(var + BN_EPS)
    return xhat, (mu, var, xhat)


def batchnorm_backward(cache, dxhat: np.ndarray) -> np.ndarray:
    mu, var, xhat = cache
    n, c, h, w = xhat.shape
    m = n * h * w
    inv_std = 1.0 / np.sqrt(var + BN_EPS)
    sum_d = dxhat.sum(axis=(0, 2, 3), keepdims=True)
    sum_dx = (dxhat * xhat).sum(axis=(0, 2, 3), keepdims=True)
    return inv_std / m * (m * dxhat - sum_d - xhat * sum_dx)


def s_block_forward(x: np.ndarray, cond: np.ndarray, w: CondWeights):
    """x: (N, C, H, W); cond: (H, W, K). Returns y and a backward cache."""
    if x.ndim != 4 or cond.ndim != 3:
        raise ValueError("x must be (N,C,H,W) and cond (H,W,K)")
    if x.shape[2:] != cond.shape[:2]:
        raise ValueError(f"spatial mismatch {x.shape[2:]} vs {cond.shape[:2]}")
    gamma, beta, path_cache = _cond_path(cond, w)
    if gamma.shape[2] != x.shape[1]:
        raise ValueError("conditioning channel width does not match x")
    xhat, bn_cache = batchnorm(x)
    g = np.moveaxis(gamma, 2, 0)[None]  # (1, C, H, W)
    b = np.moveaxis(beta, 2, 0)[None]
    y = xhat * (1.0 + g) + b
    return y, {"bn": bn_cache, "path": path_cache, "gamma": g, "w": w}


def s_block_backward(cache, dy: np.ndarray):
    """Returns (dx, dcond, dweights)."""
    xhat = cache["bn"][2]
    g = cache["gamma"]
    dxhat = dy * (1.0 + g)
    dgamma = np.moveaxis((dy * xhat).sum(axis=0), 0, 2)
    dbeta = np.moveaxis(dy.sum(axis=0), 0, 2)
    dx = batchnorm_backward(cache["bn"], dxhat)
    dcond, dw = _cond_path_backward(cache["path"], cache["w"], dgamma, dbeta)
    return dx, dcond, dw


def s_avg_block_forward(x: np.ndarray, cond_bg: np.ndarray,
                        cond_full: np.ndarray, w_s: CondWeights,
                        w_avg: CondWeights):
    """Background-mask path as usual; full-mask path spatially pooled."""
    if x.shape[2:] != cond_bg.shape[:2] or x.shape[2:] != cond_full.shape[:2]:
        raise ValueError("spatial shape mismatch")
    gamma, beta, cache_s = _cond_path(cond_bg, w_s)
    gamma_f, beta_f, cache_avg = _cond_path(cond_full, w_avg)
    gamma_avg = gamma_f.mean(axis=(0, 1), keepdims=True)
    beta_avg = beta_f.mean(axis=(0, 1), keepdims=True)
    xhat, bn_cache = batchnorm(x)
    g = np.moveaxis(gamma + gamma_avg, 2, 0)[None]
    b = np.moveaxis(beta + beta_avg, 2, 0)[None]
    y = xhat * (1.0 + g) + b
    return y, {"bn": bn_cache, "s": cache_s, "avg": cache_avg,
               "gamma_total": g, "w_s": w_s, "w_avg": w_avg,
               "hw": cond_full.shape[:2]}


def s_avg_block_backward(cache, dy: np.ndarray):
    """Returns (dx, dcond_bg, dcond_full, dw_s, dw_avg)."""
    xhat = cache["bn"][2]
    dxhat = dy * (1.0 + cache["gamma_total"])
    dgamma_total = np.moveaxis((dy * xhat).sum(axis=0), 0, 2)
    dbeta_total = np.moveaxis(dy.sum(axis=0), 0, 2)
    dx = batchnorm_backward(cache["bn"], dxhat)
    dcond_bg, dw_s = _cond_path_backward(cache["s"], cache["w_s"],
                                         dgamma_total, dbeta_total)
    h, w = cache["hw"]
    spread = np.ones((h, w, 1)) / (h * w)
    dgamma_f = spread * dgamma_total.sum(axis=(0, 1), keepdims=True)
    dbeta_f = spread * dbeta_total.sum(axis=(0, 1), keepdims=True)
    dcond_full, dw_avg = _cond_path_backward(cache["avg"], cache["w_avg"],
                                             dgamma_f, dbeta_f)
    return dx, dcond_bg, dcond_full, dw_s, dw_avg
