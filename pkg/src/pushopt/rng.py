"""Deterministic random stream splitting.

All randomness in the package flows from a single master seed. Components
derive their own independent streams by naming a path, e.g.
``stream(seed, "member", 3)``. Paths are mapped onto numpy ``SeedSequence``
spawn keys, so streams are independent, reproducible and platform-stable.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _key_component(part) -> int:
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError(f"stream path components must be non-negative: {part}")
        return int(part)
    if isinstance(part, str):
        digest = hashlib.sha256(part.encode("utf-8")).digest()
        return int.from_bytes(digest[:4], "little")
    raise TypeError(f"unsupported stream path component: {part!r}")


def seed_sequence(seed: int, *path) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed, spawn_key=tuple(_key_component(p) for p in path))


def stream(seed: int, *path) -> np.random.Generator:
    """A generator for the sub-stream named by ``path``."""
    return np.random.default_rng(seed_sequence(seed, *path))


def derive_seed(seed: int, *path) -> int:
    """A child master seed (63-bit) for the sub-stream named by ``path``."""
    words = seed_sequence(seed, *path).generate_state(2)
    return int((int(words[0]) << 31) ^ int(words[1]))
