"""Pixel-wise embedding lookups for class maps and multi-hot attribute
planes, with scatter-add backward passes. Gathers are equivalent to a
dense one-hot matrix product, which the tests verify."""

from __future__ import annotations

import numpy as np


def class_embed(class_map: np.ndarray, table: np.ndarray) -> np.ndarray:
    """class_map (H, W) ints -> (H, W, D) rows of `table`."""
    cm = np.asarray(class_map)
    if cm.min(initial=0) < 0 or cm.max(initial=0) >= table.shape[0]:
        raise ValueError("class id out of embedding-table range")
    return table[cm]


def class_embed_backward(class_map: np.ndarray, table_rows: int,
                         dy: np.ndarray) -> np.ndarray:
    dtable = np.zeros((table_rows, dy.shape[-1]))
    np.add.at(dtable, np.asarray(class_map).ravel(),
              dy.reshape(-1, dy.shape[-1]))
    return dtable


def attribute_embed(plane, table: np.ndarray) -> np.ndarray:
    """Sum of attribute embeddings per pixel; zero where no attributes.

    `plane` is an AttributePlane (sparse per-owner sets) or a dense
    (H, W, N_attr) multi-hot array.
    """
    if isinstance(plane, np.ndarray):
        return np.tensordot(plane, table, axes=([2], [0]))
    h, w = plane.shape
    out = np.zeros((h, w, table.shape[1]))
    sums = {owner: table[sorted(attrs)].sum(axis=0)
            for owner, attrs in plane.pixel_attrs.items() if attrs}
    for owner, vec in sums.items():
        out[plane.instance_map == owner] = vec
    return out


def attribute_embed_backward(plane, table_rows: int, dy: np.ndarray) -> np.ndarray:
    dtable = np.zeros((table_rows, dy.shape[-1]))
    if isinstance(plane, np.ndarray):
        return np.tensordot(plane, dy, axes=([0, 1], [0, 1]))
    for owner, attrs in plane.pixel_attrs.items():
        if not attrs:
            continue
        grad = dy[plane.instance_map == owner].sum(axis=0)
        for a in attrs:
            dtable[a] += grad
    return dtable


def apply_contextualized(class_map: np.ndarray, ctx: np.ndarray) -> np.ndarray:
    """Broadcast per-class contextualized embeddings onto the mask; same
    gather semantics as class_embed with ctx as the table."""
    return class_embed(class_map, ctx)


def apply_contextualized_backward(class_map: np.ndarray, ctx_rows: int,
                                  dy: np.ndarray) -> np.ndarray:
    return class_embed_backward(class_map, ctx_rows, dy)
