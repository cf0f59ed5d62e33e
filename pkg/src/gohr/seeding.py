"""Reproducible RNG streams.

All randomness flows through numpy's PCG64 generator.  Derived seeds are
the first 8 bytes of SHA-256 over the '/'-joined string forms of the
components, so a (master seed, rule name, trial index) triple maps to the
same 64-bit stream seed on every platform.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(*components) -> int:
    """Collapse arbitrary components into a stable 64-bit seed."""
    text = "/".join(str(c) for c in components)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def derive_rng(*components) -> np.random.Generator:
    return make_rng(derive_seed(*components))
