"""Seeded generator streams.

Every random draw in the package goes through :func:`stream`, which derives an
independent PCG64 generator from ``(seed, tag)``. New call sites use a new tag,
so they never shift the draws of existing ones.
"""

import zlib

import numpy as np


def stream(seed: int, tag: str) -> np.random.Generator:
    key = zlib.crc32(tag.encode("utf-8"))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, key])))


def derive_seed(seed: int, tag: str) -> int:
    return int(stream(seed, tag).integers(0, 2**31 - 1))
