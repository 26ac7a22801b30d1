"""Deterministic seeding helpers.

All randomness in this package flows through NumPy's PCG64 generator, and
independent streams (one per map, one per benchmark run) are derived from a
single 64-bit seed with a SplitMix64 mix. `numpy.random.Generator.shuffle`
is the documented Fisher-Yates shuffle used wherever data order matters, so
every result here is reproducible from (seed, input order) alone.
"""

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF

_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def mix64(seed: int, index: int) -> int:
    """Derive an independent 64-bit seed from (seed, index) via SplitMix64."""
    z = (seed + (index + 1) * _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return (z ^ (z >> 31)) & MASK64


def make_rng(seed: int) -> np.random.Generator:
    """Seeded PCG64 generator."""
    return np.random.Generator(np.random.PCG64(seed & MASK64))
