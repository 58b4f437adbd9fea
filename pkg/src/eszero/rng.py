"""Deterministic, splittable random streams.

Every random draw in this package comes from a counter-based generator
(numpy's Philox) keyed by a 64-bit seed derived from a master seed plus an
arbitrary tuple of stream identifiers.  Two processes that derive the same
stream get bitwise-identical draws, which is what the synchronized ES
workers rely on.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    # Finalizer from the splitmix64 generator; good 64-bit avalanche.
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (x ^ (x >> 31)) & _MASK64


def derive_seed(master: int, *stream: int | str) -> int:
    """Hash ``(master, *stream)`` into a single 64-bit seed.

    Strings are allowed as stream labels so call sites can tag streams
    ("episode", "noise", ...) without colliding on bare integers.
    """
    h = _splitmix64(master & _MASK64)
    for part in stream:
        if isinstance(part, str):
            # type tag + per-byte fold + length: "ab" never collides with ("a","b")
            h = _splitmix64(h ^ 0xC0FFEE)
            data = part.encode()
            for b in data:
                h = _splitmix64(h ^ b)
            h = _splitmix64(h ^ len(data))
        elif isinstance(part, (int, np.integer)):
            h = _splitmix64(h ^ 0xBEEF)
            h = _splitmix64(h ^ (int(part) & _MASK64))
        else:
            raise TypeError(f"stream parts must be int or str, got {type(part).__name__}")
    return h


def make_rng(master: int, *stream: int | str) -> np.random.Generator:
    """A fresh Philox generator for the stream ``(master, *stream)``."""
    return np.random.Generator(np.random.Philox(key=derive_seed(master, *stream)))
