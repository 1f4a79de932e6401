"""Seed splitting.

Every randomized component draws from ``rng_for(seed, tag, i, j, ...)``: the
global integer seed is the SeedSequence entropy and the remaining parts
(strings hashed with CRC-32, integers as is, nested tuples flattened) form
the spawn key. Streams for different (tag, index) tuples are independent, and
a given stream is the same no matter which process or in what order it is
created, so parallel and serial runs agree.
"""

from __future__ import annotations

import zlib

import numpy as np


def _flatten(parts):
    for p in parts:
        if isinstance(p, (tuple, list)):
            yield from _flatten(p)
        else:
            yield p


def _word(p) -> int:
    if isinstance(p, str):
        return zlib.crc32(p.encode())
    if isinstance(p, (bool, np.bool_)):
        return int(p)
    if isinstance(p, (int, np.integer)):
        return int(p) & 0xFFFFFFFFFFFFFFFF
    if isinstance(p, float):
        return zlib.crc32(repr(p).encode())
    raise TypeError(f"cannot derive a seed from {p!r}")


def seed_sequence(*parts) -> np.random.SeedSequence:
    flat = [_word(p) for p in _flatten(parts)]
    if not flat:
        flat = [0]
    return np.random.SeedSequence(entropy=flat[0], spawn_key=tuple(flat[1:]))


def rng_for(*parts) -> np.random.Generator:
    return np.random.default_rng(seed_sequence(*parts))
