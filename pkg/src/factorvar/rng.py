"""Deterministic named random substreams.

All randomness in the package flows from a single master seed through
named substreams, so results are reproducible and independent of
execution order or parallel scheduling.
"""

import hashlib

import numpy as np


def _token_entropy(token) -> int:
    digest = hashlib.sha256(repr(token).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def substream(master_seed: int, *tokens) -> np.random.Generator:
    """Return a generator for the substream named by ``tokens``.

    Distinct token tuples yield statistically independent streams; the same
    (master_seed, tokens) pair always yields the identical stream, on any
    platform.
    """
    entropy = [int(master_seed)] + [_token_entropy(t) for t in tokens]
    return np.random.default_rng(np.random.SeedSequence(entropy))
