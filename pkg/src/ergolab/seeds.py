"""Seed splitting.

``derive_seed(master, replica)`` is BLAKE2b-64 over the 16-byte big-endian
concatenation of ``master`` and ``replica`` (both reduced mod 2**64).  The
function is part of the replay contract and must not change between versions.
"""
import hashlib

import numpy as np

MASK64 = (1 << 64) - 1


def derive_seed(master, replica):
    data = (int(master) & MASK64).to_bytes(8, "big") + (int(replica) & MASK64).to_bytes(8, "big")
    return int.from_bytes(hashlib.blake2b(data, digest_size=8).digest(), "big")


def make_rng(master, replica=None):
    """numpy Generator for ``master`` (optionally split by ``replica``)."""
    seed = int(master) & MASK64 if replica is None else derive_seed(master, replica)
    return np.random.Generator(np.random.PCG64(seed))


def hash_uniform(seed, *parts):
    """Deterministic uniform in [0, 1) keyed by ``seed`` and integer ``parts``."""
    h = hashlib.blake2b(digest_size=8, key=(int(seed) & MASK64).to_bytes(8, "big"))
    for p in parts:
        h.update(int(p).to_bytes(8, "big", signed=True))
    return int.from_bytes(h.digest(), "big") / 2.0**64
