"""Counter-based random streams derived from a master seed."""

import hashlib

import numpy as np


def stable_int(value: object) -> int:
    """32-bit digest of ``str(value)``; identical across processes and runs."""
    digest = hashlib.sha256(str(value).encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big")


def derive_rng(master_seed: int, *coordinates: object) -> np.random.Generator:
    """Independent generator for the stream named by ``coordinates``.

    The stream depends only on the seed and the coordinate values, never on
    how many other streams were drawn before it.
    """
    sequence = np.random.SeedSequence(
        master_seed, spawn_key=tuple(stable_int(c) for c in coordinates)
    )
    return np.random.default_rng(sequence)
