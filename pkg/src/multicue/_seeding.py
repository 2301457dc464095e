"""Stable seed derivation.

Python's built-in ``hash`` is salted per process, so every seeded stream in
the package is keyed through blake2b instead.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(*parts: object) -> int:
    """Map an arbitrary tuple of keys to a 64-bit seed, identically across runs."""
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        token = repr(part).encode("utf-8")
        h.update(len(token).to_bytes(4, "little"))
        h.update(token)
    return int.from_bytes(h.digest(), "little")


def derived_rng(*parts: object) -> np.random.Generator:
    return np.random.default_rng(derive_seed(*parts))
