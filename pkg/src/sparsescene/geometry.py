"""Polygon scanline filling with the even-odd rule.

Pixel (i, j) is covered iff its center (i + 0.5, j + 0.5) is inside the
union of rings under even-odd parity. `fill_rings` walks rows and fills
spans between sorted edge crossings; `point_in_rings` is the independent
per-point crossing-number test used as the rasterization oracle.
"""

from __future__ import annotations

import numpy as np


def _edges(rings: list[np.ndarray]) -> np.ndarray:
    """Flatten closed rings into an (E, 4) array of segments x1,y1,x2,y2."""
    segs = []
    for ring in rings:
        pts = np.asarray(ring, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
            raise ValueError("each ring needs >= 3 (x, y) points")
        nxt = np.roll(pts, -1, axis=0)
        segs.append(np.concatenate([pts, nxt], axis=1))
    if not segs:
        return np.zeros((0, 4))
    return np.concatenate(segs, axis=0)


def fill_rings(rings: list[np.ndarray], width: int, height: int) -> np.ndarray:
    """Rasterize rings to a (height, width) bool mask, even-odd fill."""
    mask = np.zeros((height, width), dtype=bool)
    edges = _edges(rings)
    if len(edges) == 0:
        return mask
    x1, y1, x2, y2 = edges.T
    ymin = np.minimum(y1, y2)
    ymax = np.maximum(y1, y2)
    j0 = max(0, int(np.floor(ymin.min() - 0.5)))
    j1 = min(height - 1, int(np.ceil(ymax.max())))
    centers = np.arange(width) + 0.5
    for j in range(j0, j1 + 1):
        yc = j + 0.5
        hit = (ymin <= yc) & (yc < ymax)
        if not hit.any():
            continue
        t = (yc - y1[hit]) / (y2[hit] - y1[hit])
        xs = np.sort(x1[hit] + t * (x2[hit] - x1[hit]))
        # inside iff an odd number of crossings lie at or left of the center
        parity = np.searchsorted(xs, centers, side="right") % 2
        mask[j] = parity.astype(bool)
    return mask


def point_in_rings(x: float, y: float, rings: list[np.ndarray]) -> bool:
    """Even-odd crossing-number test; boundary convention matches fill_rings."""
    inside = False
    for ring in rings:
        pts = np.asarray(ring, dtype=np.float64)
        n = len(pts)
        for k in range(n):
            x1, y1 = pts[k]
            x2, y2 = pts[(k + 1) % n]
            if min(y1, y2) <= y < max(y1, y2):
                xc = x1 + (y - y1) / (y2 - y1) * (x2 - x1)
                if xc <= x:
                    inside = not inside
    return inside


def rings_bbox(rings: list[np.ndarray]) -> tuple[float, float, float, float]:
    pts = np.concatenate([np.asarray(r, dtype=np.float64) for r in rings], axis=0)
    return (
        float(pts[:, 0].min()),
        float(pts[:, 1].min()),
        float(pts[:, 0].max()),
        float(pts[:, 1].max()),
    )


def rect_iou(a: tuple[float, float, float, float],
             b: tuple[float, float, float, float]) -> float:
    """Closed-form IoU of two axis-aligned boxes (x0, y0, x1, y1)."""
    iw = min(a[2], b[2]) - max(a[0], b[0])
    ih = min(a[3], b[3]) - max(a[1], b[1])
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    union = area_a + area_b - inter
    return inter / union if union > 0 else 0.0
