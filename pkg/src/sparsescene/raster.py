"""Rasterize scenes into sparse label planes.

Painter's algorithm: instances are drawn from the largest pixel area to
the smallest, so small parts (headlights) end up on top of their
containers (cars). Area ties break toward the higher id, which is drawn
later and wins.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .geometry import fill_rings
from .scene import SceneGraph
from .vocab import FOREGROUND, NO_CLASS_ID

RAW_MAGIC = b"SPMK"


@dataclass
class LabelMaps:
    class_map: np.ndarray     # (H, W) int32, 0 = no class
    instance_map: np.ndarray  # (H, W) int32, 0 = none

    @property
    def height(self) -> int:
        return self.class_map.shape[0]

    @property
    def width(self) -> int:
        return self.class_map.shape[1]


@dataclass
class AttributePlane:
    """Sparse H×W×N_attr multi-hot plane: per-pixel attribute-id sets."""
    shape: tuple[int, int]
    n_attr: int
    pixel_attrs: dict[int, frozenset[int]] = field(default_factory=dict)
    instance_map: np.ndarray = None

    def at(self, i: int, j: int) -> frozenset[int]:
        owner = int(self.instance_map[j, i]) if self.instance_map is not None else 0
        return self.pixel_attrs.get(owner, frozenset())

    def dense(self) -> np.ndarray:
        h, w = self.shape
        out = np.zeros((h, w, self.n_attr), dtype=np.float64)
        if self.instance_map is None:
            return out
        for owner, attrs in self.pixel_attrs.items():
            if not attrs:
                continue
            where = self.instance_map == owner
            for a in attrs:
                out[:, :, a][where] = 1.0
        return out


def rasterize(scene: SceneGraph, width: int | None = None,
              height: int | None = None) -> LabelMaps:
    width = scene.width if width is None else int(width)
    height = scene.height if height is None else int(height)
    sx = width / scene.width
    sy = height / scene.height

    class_map = np.zeros((height, width), dtype=np.int32)
    instance_map = np.zeros((height, width), dtype=np.int32)

    entries = []
    for inst in scene.instances.values():
        rings = [np.column_stack([r[:, 0] * sx, r[:, 1] * sy])
                 for r in inst.mask.rings]
        m = fill_rings(rings, width, height)
        entries.append((int(m.sum()), inst.id, m, inst.class_id))

    # largest first; equal areas: lower id first so the higher id wins
    entries.sort(key=lambda e: (-e[0], e[1]))
    for _area, iid, m, cid in entries:
        class_map[m] = cid
        instance_map[m] = iid
    return LabelMaps(class_map=class_map, instance_map=instance_map)


def split_bg_fg(maps: LabelMaps, roles: dict[int, str]) -> tuple[LabelMaps, LabelMaps]:
    fg_ids = {iid for iid, role in roles.items() if role == FOREGROUND}
    fg_px = np.isin(maps.instance_map, list(fg_ids)) if fg_ids else \
        np.zeros_like(maps.instance_map, dtype=bool)
    occupied = maps.instance_map != 0
    bg_px = occupied & ~fg_px
    bg = LabelMaps(class_map=np.where(bg_px, maps.class_map, NO_CLASS_ID),
                   instance_map=np.where(bg_px, maps.instance_map, 0))
    fg = LabelMaps(class_map=np.where(fg_px, maps.class_map, NO_CLASS_ID),
                   instance_map=np.where(fg_px, maps.instance_map, 0))
    return bg, fg


def attribute_plane(scene: SceneGraph, maps: LabelMaps, n_attr: int) -> AttributePlane:
    return AttributePlane(
        shape=(maps.height, maps.width),
        n_attr=n_attr,
        pixel_attrs={inst.id: frozenset(inst.attributes)
                     for inst in scene.instances.values()},
        instance_map=maps.instance_map,
    )


def default_palette(n: int = 256) -> bytes:
    """Deterministic palette; index 0 black, others via a fixed hash mix."""
    rgb = bytearray(n * 3)
    for i in range(1, n):
        v = (i * 2654435761) & 0xFFFFFFFF
        rgb[3 * i] = 32 + (v & 0xFF) * 7 // 8
        rgb[3 * i + 1] = 32 + ((v >> 8) & 0xFF) * 7 // 8
        rgb[3 * i + 2] = 32 + ((v >> 16) & 0xFF) * 7 // 8
    return bytes(rgb)


def export_png(class_map: np.ndarray, palette: bytes | None = None) -> bytes:
    """Indexed 8-bit PNG (palette index = class id); 16-bit grayscale
    when ids exceed 255."""
    buf = io.BytesIO()
    if class_map.max(initial=0) > 255:
        img = Image.fromarray(class_map.astype(np.int32)).convert("I;16")
    else:
        img = Image.fromarray(class_map.astype(np.uint8), mode="P")
        img.putpalette(palette if palette is not None else default_palette())
    img.save(buf, format="PNG")
    return buf.getvalue()


def import_png(data: bytes) -> np.ndarray:
    img = Image.open(io.BytesIO(data))
    return np.asarray(img).astype(np.int32)


def export_raw(maps: LabelMaps) -> bytes:
    """8-byte header (magic "SPMK", u16 width, u16 height) then row-major
    little-endian u16 class ids."""
    header = RAW_MAGIC + struct.pack("<HH", maps.width, maps.height)
    return header + maps.class_map.astype("<u2").tobytes()


def import_raw(data: bytes) -> LabelMaps:
    if data[:4] != RAW_MAGIC:
        raise ValueError("bad magic")
    w, h = struct.unpack("<HH", data[4:8])
    arr = np.frombuffer(data[8:], dtype="<u2").reshape(h, w).astype(np.int32)
    return LabelMaps(class_map=arr, instance_map=np.zeros_like(arr))


def export_rgb_png(rgb: np.ndarray) -> bytes:
    """rgb: (3, H, W) floats in [0, 1] or arbitrary range, min-max scaled."""
    x = np.asarray(rgb, dtype=np.float64)
    lo, hi = x.min(), x.max()
    if hi - lo < 1e-12:
        scaled = np.zeros_like(x)
    else:
        scaled = (x - lo) / (hi - lo)
    img = Image.fromarray(
        (np.moveaxis(scaled, 0, -1) * 255).round().astype(np.uint8), mode="RGB")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()
