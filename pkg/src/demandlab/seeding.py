"""Deterministic named random streams derived from one master seed.

Every source of randomness in the package pulls from its own named stream so
that adding a new stream (or reordering calls in one stream) never perturbs
draws in any other stream.
"""

import hashlib

import numpy as np


def _key(name: str) -> int:
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def stream(master_seed: int, name: str) -> np.random.Generator:
    """Independent PCG64 generator for the given stream name."""
    seq = np.random.SeedSequence([int(master_seed), _key(name)])
    return np.random.Generator(np.random.PCG64(seq))


def derive_seed(master_seed: int, *parts) -> int:
    """Stable 63-bit sub-seed for a stage or trial, e.g. derive_seed(s, "trial", 7)."""
    h = hashlib.sha256(str(int(master_seed)).encode("utf-8"))
    for part in parts:
        h.update(b"/")
        h.update(str(part).encode("utf-8"))
    return int.from_bytes(h.digest()[:8], "little") >> 1
