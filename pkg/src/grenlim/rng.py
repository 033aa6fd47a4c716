"""Counter-based, splittable random streams.

Every stochastic routine in the package derives its generator through
``stream``: a pure function of the master seed and an integer path. Two
distinct paths give statistically independent Philox streams, and the
mapping does not depend on scheduling, worker count, or call order,
which is what makes replicated runs reproducible byte-for-byte.
"""

from __future__ import annotations

import numpy as np

__all__ = ["stream", "as_generator"]


def stream(seed: int, *path: int) -> np.random.Generator:
    """Return the Philox generator for ``(seed, path)``.

    Parameters
    ----------
    seed : int
        Master seed of the run.
    *path : int
        Position in the stream tree, e.g. ``stream(s, 0, i)`` for
        replicate i of a finite-sample run and ``stream(s, 1, j)`` for
        limit draw j. Distinct paths never collide.
    """
    ss = np.random.SeedSequence(seed, spawn_key=tuple(path))
    return np.random.Generator(np.random.Philox(ss))


def as_generator(seed) -> np.random.Generator:
    """Coerce an int seed, SeedSequence, or Generator to a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed))
    return stream(int(seed))
