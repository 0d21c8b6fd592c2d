"""Small dense 2-D convolution (3x3, stride 1, zero "same" padding) with
exact reverse-mode gradients. Layout: feature maps are (H, W, C),
kernels are (kh, kw, Cin, Cout)."""

from __future__ import annotations

import numpy as np


def conv2d(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    kh, kw, cin, cout = w.shape
    if x.shape[2] != cin:
        raise ValueError(f"channel mismatch: {x.shape[2]} vs {cin}")
    ph, pw = kh // 2, kw // 2
    xp = np.pad(x, ((ph, ph), (pw, pw), (0, 0)))
    h, wd = x.shape[:2]
    y = np.zeros((h, wd, cout))
    for dy in range(kh):
        for dx in range(kw):
            y += xp[dy:dy + h, dx:dx + wd, :] @ w[dy, dx]
    return y


def conv2d_backward(x: np.ndarray, w: np.ndarray,
                    dy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    kh, kw, cin, cout = w.shape
    ph, pw = kh // 2, kw // 2
    h, wd = x.shape[:2]
    xp = np.pad(x, ((ph, ph), (pw, pw), (0, 0)))
    dxp = np.zeros_like(xp)
    dw = np.zeros_like(w)
    for dyk in range(kh):
        for dxk in range(kw):
            patch = xp[dyk:dyk + h, dxk:dxk + wd, :]
            dw[dyk, dxk] = np.tensordot(patch, dy, axes=([0, 1], [0, 1]))
            dxp[dyk:dyk + h, dxk:dxk + wd, :] += dy @ w[dyk, dxk].T
    dx = dxp[ph:ph + h, pw:pw + wd, :]
    return dx, dw


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_backward(x: np.ndarray, dy: np.ndarray) -> np.ndarray:
    return dy * (x > 0.0)
