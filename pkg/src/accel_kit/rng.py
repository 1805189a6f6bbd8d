"""Deterministic counter-based random numbers for reproducible experiments.

Random starting vectors must be byte-reproducible across platforms and
processes, so instead of relying on a stateful generator we derive every
component directly from a 64-bit seed with the SplitMix64 output function:

    z     = (seed + index * 0x9E3779B97F4A7C15) mod 2**64
    z     = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 mod 2**64
    z     = (z ^ (z >> 27)) * 0x94D049BB133111EB mod 2**64
    mixed = z ^ (z >> 31)

``mixed / 2**64`` is then mapped affinely onto ``[low, high)``.  Every step is
exact integer arithmetic followed by one correctly rounded float division and
one fused-free affine map, so identical seeds give identical vectors on any
IEEE-754 platform.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def splitmix64(value: int) -> int:
    """Return the SplitMix64 mix of a 64-bit integer."""
    z = value & _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def uniform(seed: int, count: int, low: float = 0.0, high: float = 1.0) -> np.ndarray:
    """Return ``count`` reproducible uniforms on ``[low, high)``.

    Component ``i`` depends only on ``(seed, i)``, never on call order, so the
    same seed always produces the same vector regardless of how many values
    were drawn before.
    """
    if count < 0:
        raise ValueError(f"count must be nonnegative, got {count}")
    if not high > low:
        raise ValueError(f"need high > low, got [{low}, {high})")
    out = np.empty(count, dtype=np.float64)
    for i in range(count):
        mixed = splitmix64(seed + (i + 1) * _GOLDEN)
        out[i] = low + (high - low) * (mixed / 2.0**64)
    return out
