"""Token-embedding I/O and a deterministic stand-in encoder.

Binary file layout: magic "TOKE", u32 n, u32 d_lm, u8 layer tag, then
n * d_lm little-endian float64. A JSON alternative {"layer": int,
"embeddings": [[...], ...]} is also accepted.

The pseudo-encoder hashes each token string to a unit-norm vector so
tests and demos need no language model; real pre-computed embeddings
drop in through the same file format.
"""

from __future__ import annotations

import hashlib
import json
import struct

import numpy as np

TOKEN_MAGIC = b"TOKE"
DEFAULT_D_LM = 768
START_TOKEN = "[CLS]"
END_TOKEN = "[SEP]"


def pseudo_encode_token(token: str, d_lm: int = DEFAULT_D_LM) -> np.ndarray:
    seed = int.from_bytes(hashlib.sha256(token.encode()).digest()[:8], "little")
    v = np.random.default_rng(seed).standard_normal(d_lm)
    return v / np.linalg.norm(v)


def pseudo_encode_sentence(text: str, d_lm: int = DEFAULT_D_LM) -> np.ndarray:
    """Whitespace tokenization wrapped in start/end delimiters."""
    tokens = [START_TOKEN] + text.split() + [END_TOKEN]
    return np.stack([pseudo_encode_token(t, d_lm) for t in tokens])


def save_token_embeddings(tok: np.ndarray, layer_tag: int = 0) -> bytes:
    n, d_lm = tok.shape
    header = TOKEN_MAGIC + struct.pack("<IIB", n, d_lm, layer_tag)
    return header + np.ascontiguousarray(tok, dtype="<f8").tobytes()


def load_token_embeddings(data: bytes) -> tuple[np.ndarray, int]:
    """Returns (embeddings (n, d_lm), layer_tag)."""
    if data[:1] in (b"{", b"["):
        obj = json.loads(data)
        return np.asarray(obj["embeddings"], dtype=np.float64), int(obj.get("layer", 0))
    if data[:4] != TOKEN_MAGIC:
        raise ValueError("bad token-embedding file magic")
    n, d_lm, layer = struct.unpack("<IIB", data[4:13])
    tok = np.frombuffer(data[13:], dtype="<f8")
    if tok.size != n * d_lm:
        raise ValueError("token-embedding payload length mismatch")
    arr = tok.reshape(n, d_lm).copy()
    if arr.shape[0] < 2:
        raise ValueError("need at least the two delimiter tokens")
    return arr, layer
