"""Seeded random streams.

Every random draw in the package comes from Philox4x64-10 (numpy's
``Philox`` bit generator) keyed directly with a 64-bit seed and a zero
counter.  Keying directly, rather than through ``SeedSequence``, keeps the
raw stream reproducible by any Philox4x64-10 implementation.
"""
from __future__ import annotations

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed) & MASK64))


def derive_seed(*parts) -> int:
    """Hash arbitrary parts into an independent 64-bit seed.

    Used for per-run / per-dataset / per-fold streams so that adding a
    dataset or a noise level never perturbs the streams of existing cells.
    """
    h = hashlib.blake2b(digest_size=8)
    for p in parts:
        h.update(repr(p).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little")


def round_half_up(x: float) -> int:
    # x is non-negative everywhere this is used
    return int(np.floor(x + 0.5 + 1e-12))
