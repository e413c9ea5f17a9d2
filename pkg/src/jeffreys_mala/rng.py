"""Deterministic, splittable random streams.

Every operation that consumes randomness receives an explicit stream; there is
no global RNG anywhere in the package.  Streams are counter-based
(Philox) generators derived from a root seed plus an integer path, so any
worker can reconstruct its stream independently of scheduling:

    stream(seed)            -> root stream
    stream(seed, 3)         -> third child
    stream(seed, 3, 0, 7)   -> nested derivation

Two calls with the same (seed, path) always yield generators with identical
output, which is also how common-random-number pairs are built.
"""

from __future__ import annotations

import numpy as np

__all__ = ["stream", "seed_sequence", "crn_pair"]


def seed_sequence(seed: int, *path: int) -> np.random.SeedSequence:
    """SeedSequence for a derivation path below a root seed."""
    return np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))


def stream(seed: int, *path: int) -> np.random.Generator:
    """Counter-based generator addressed by (seed, *path)."""
    return np.random.Generator(np.random.Philox(seed_sequence(seed, *path)))


def crn_pair(seed: int, *path: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Two independent generator objects with bit-identical output streams.

    Used to evaluate a stochastic function at two nearby inputs with common
    random numbers.
    """
    return stream(seed, *path), stream(seed, *path)
