"""Counter-mode SHA-256 helpers: derived trial seeds and seed expansion.

Everything random in the harness flows from a master seed through these, so
identical configs replay bit-identically.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["prf_bytes", "prf_bits", "derive_seed", "rng_from"]


def prf_bytes(tag: bytes, payload: bytes, count: int) -> bytes:
    out = bytearray()
    ctr = 0
    while len(out) < count:
        out += hashlib.sha256(tag + b"\x00" + payload + b"\x00" + ctr.to_bytes(8, "big")).digest()
        ctr += 1
    return bytes(out[:count])


def prf_bits(tag: bytes, payload: bytes, nbits: int) -> bytes:
    """nbits bytes each holding one bit (0/1)."""
    raw = prf_bytes(tag, payload, (nbits + 7) // 8)
    arr = np.unpackbits(np.frombuffer(raw, dtype=np.uint8))[:nbits]
    return arr.tobytes()


def derive_seed(master: int, *labels) -> int:
    """Independent 64-bit stream seed for (master, labels...)."""
    payload = ":".join(str(x) for x in labels).encode()
    return int.from_bytes(prf_bytes(b"seed", str(master).encode() + b"/" + payload, 8), "big")


def rng_from(master: int, *labels) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, *labels))
