"""Deterministic random-stream derivation.

Every stochastic routine in the library owns a counter-based Philox
generator derived from a user seed plus a structured stream path, e.g.
``derive_rng(seed, "fuzz", trial)``.  Philox is counter-based and
platform-independent, so identical (seed, path) pairs reproduce the same
draws bit-for-bit on any machine.  String path components are hashed to
stable 64-bit integers (no dependence on PYTHONHASHSEED).
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["derive_rng", "derive_seed", "stream_key"]


def _component_to_int(c) -> int:
    if isinstance(c, (int, np.integer)):
        return int(c) & 0xFFFFFFFFFFFFFFFF
    if isinstance(c, str):
        digest = hashlib.sha256(c.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "little")
    raise TypeError(f"stream path components must be int or str, got {type(c)!r}")


def stream_key(seed: int, *path) -> tuple[int, ...]:
    """Stable integer key identifying one random stream."""
    return (int(seed) & 0xFFFFFFFFFFFFFFFF,) + tuple(_component_to_int(c) for c in path)


def derive_seed(seed: int, *path) -> int:
    """Collapse (seed, *path) into a single 63-bit child seed."""
    key = stream_key(seed, *path)
    blob = b"".join(k.to_bytes(8, "little") for k in key)
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "little") >> 1


def derive_rng(seed: int, *path) -> np.random.Generator:
    """Philox generator for the stream (seed, *path).

    Distinct paths give statistically independent streams; the same path
    always reproduces the same sequence.
    """
    ss = np.random.SeedSequence(entropy=stream_key(seed, *path))
    return np.random.Generator(np.random.Philox(ss))
