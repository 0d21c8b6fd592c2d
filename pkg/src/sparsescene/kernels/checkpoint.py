"""Weight checkpoints: one file mapping tensor names to shape plus raw
little-endian float64 data. Layout: magic "WTS1", u32 header length,
JSON header {name: {"shape": [...], "offset": int}}, payload."""

from __future__ import annotations

import json
import struct

import numpy as np

MAGIC = b"WTS1"


def save_tensors(tensors: dict[str, np.ndarray]) -> bytes:
    header = {}
    chunks = []
    offset = 0
    for name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[name], dtype="<f8")
        header[name] = {"shape": list(arr.shape), "offset": offset}
        chunks.append(arr.tobytes())
        offset += arr.nbytes
    hj = json.dumps(header, sort_keys=True).encode()
    return MAGIC + struct.pack("<I", len(hj)) + hj + b"".join(chunks)


def load_tensors(data: bytes) -> dict[str, np.ndarray]:
    if data[:4] != MAGIC:
        raise ValueError("bad checkpoint magic")
    (hlen,) = struct.unpack("<I", data[4:8])
    header = json.loads(data[8:8 + hlen])
    payload = data[8 + hlen:]
    out = {}
    for name, meta in header.items():
        shape = tuple(meta["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = meta["offset"]
        arr = np.frombuffer(payload, dtype="<f8", count=count, offset=start)
        out[name] = arr.reshape(shape).copy()
    return out
