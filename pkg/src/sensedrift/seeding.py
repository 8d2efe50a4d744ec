"""Deterministic RNG derivation shared by sampling, clustering and synthesis.

Every randomized step in the pipeline draws from a generator derived from
(user seed, context strings). Context strings are hashed with sha256 so the
streams are stable across processes and platforms, which is what makes
parallel scoring byte-identical to sequential scoring.
"""
from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def stable_hash(*parts: str) -> int:
    """64-bit hash of the given strings, stable across runs and platforms."""
    digest = hashlib.sha256("\x1f".join(parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def derive_seed(seed: int, *parts: str) -> int:
    """Collapse a user seed plus context strings into a single 64-bit seed."""
    return stable_hash(str(seed & _MASK64), *parts)


def rng_for(seed: int, *parts: int | str) -> np.random.Generator:
    """Generator seeded from a user seed plus any mix of context values."""
    entropy: list[int] = [seed & _MASK64]
    for part in parts:
        entropy.append(stable_hash(part) if isinstance(part, str) else int(part) & _MASK64)
    return np.random.default_rng(np.random.SeedSequence(entropy))
