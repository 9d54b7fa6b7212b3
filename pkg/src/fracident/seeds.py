"""Reproducible seed derivation and random generators.

All randomness goes through NumPy's ``PCG64`` bit generator (PCG-XSL-RR
128/64), which produces the same stream on every platform for a given seed.
Child seeds are derived as::

    SeedSequence([master, tag_word, index]).generate_state(1, uint64)[0]

where ``tag_word`` is the first 8 bytes (big-endian) of ``sha256(tag)``.
A child depends only on its own ``(master, tag, index)`` triple, so adding
runs never perturbs the streams of earlier runs.
"""

from __future__ import annotations

import hashlib

import numpy as np

U64_MAX = 2**64 - 1


def tag_word(tag: str) -> int:
    return int.from_bytes(hashlib.sha256(tag.encode("utf-8")).digest()[:8], "big")


def derive_seed(master: int, tag: str, index: int = 0) -> int:
    """Child seed for ``(master, tag, index)``, a 64-bit unsigned integer."""
    if not 0 <= master <= U64_MAX:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {master!r}")
    if index < 0:
        raise ValueError(f"index must be nonnegative, got {index!r}")
    seq = np.random.SeedSequence([int(master), tag_word(tag), int(index)])
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed: int) -> np.random.Generator:
    if not 0 <= seed <= U64_MAX:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed!r}")
    return np.random.Generator(np.random.PCG64(int(seed)))
