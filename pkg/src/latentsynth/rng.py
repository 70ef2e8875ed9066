"""Seeded splitmix64 generator used everywhere randomness is needed.

The generator is counter-based (output k is a pure function of seed and k),
so blocks of any size can be produced without carrying numpy RNG state
around, and runs are bit-reproducible for a fixed seed.
"""
from __future__ import annotations

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


class SplitMix64:
    """Deterministic 64-bit generator with uniform / normal / integer draws."""

    def __init__(self, seed: int):
        self._seed = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
        self._count = 0

    def next_u64(self, n: int) -> np.ndarray:
        idx = np.arange(self._count + 1, self._count + n + 1, dtype=np.uint64)
        self._count += n
        with np.errstate(over="ignore"):
            return _mix((self._seed + idx * _GAMMA) & _MASK)

    def uniform(self, shape=()) -> np.ndarray:
        n = int(np.prod(shape)) if shape else 1
        u = (self.next_u64(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53
        return u.reshape(shape) if shape else float(u[0])

    def normal(self, shape=()) -> np.ndarray:
        n = int(np.prod(shape)) if shape else 1
        m = (n + 1) // 2
        bits = self.next_u64(2 * m)
        # u1 in (0, 1] so log() is safe; u2 in [0, 1)
        u1 = ((bits[:m] >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53
        u2 = (bits[m:] >> np.uint64(11)).astype(np.float64) * 2.0**-53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        z = np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:n]
        return z.reshape(shape) if shape else float(z[0])

    def integers(self, low: int, high: int, n: int) -> np.ndarray:
        """Uniform integers in [low, high). Modulo bias is irrelevant here."""
        span = np.uint64(high - low)
        return (self.next_u64(n) % span).astype(np.int64) + low

    def fork(self) -> "SplitMix64":
        """Derive an independent child stream."""
        return SplitMix64(int(self.next_u64(1)[0]))
