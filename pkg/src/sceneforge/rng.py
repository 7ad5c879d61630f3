"""Deterministic random streams derived from (global seed, scene id)."""

from __future__ import annotations

import hashlib

import numpy as np

# All randomness in the package flows through numpy Generators, whose
# bit streams are stable across platforms for a fixed seed.
RandomStream = np.random.Generator

_U64 = (1 << 64) - 1


def stable_hash64(text: str) -> int:
    """Platform-independent 64-bit hash of a string (sha256 prefix)."""
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def derive_stream(global_seed: int, scene_id: str | None = None) -> RandomStream:
    """Create the pseudorandom stream for one job.

    Identical (global_seed, scene_id) pairs yield identical draw
    sequences on every platform.
    """
    entropy = [int(global_seed) & _U64]
    if scene_id is not None:
        entropy.append(stable_hash64(scene_id))
    return np.random.default_rng(np.random.SeedSequence(entropy))
