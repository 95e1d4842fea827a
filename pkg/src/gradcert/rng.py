"""Deterministic random streams used for problem generation and noise.

Reproducibility across implementations (and languages) is part of the file
format contract, so the generator is pinned down to the bit level rather than
delegated to numpy's (version- and library-specific) bit generators.

Stream definition
-----------------
State update and output mixing are splitmix64:

    state <- (state + 0x9E3779B97F4A7C15) mod 2^64
    z <- state
    z <- (z xor (z >> 30)) * 0xBF58476D1CE4E5B9   mod 2^64
    z <- (z xor (z >> 27)) * 0x94D049BB133111EB   mod 2^64
    output: z xor (z >> 31)

Derived draws, each consuming outputs in order:

    uniform:  u = (w >> 11) * 2^-53                   in [0, 1)
    gaussian: w1, w2 consecutive outputs;
              u1 = ((w1 >> 11) + 1) * 2^-53           in (0, 1]
              u2 = (w2 >> 11) * 2^-53
              g  = sqrt(-2 ln u1) * cos(2 pi u2)

No Box-Muller spare is cached: every gaussian consumes exactly two outputs,
so positions in the stream are a pure function of the draw count.
"""

from __future__ import annotations

import math

import numpy as np

_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_MASK = (1 << 64) - 1


def mix64(value: int) -> int:
    """Stateless splitmix64 output function of a 64-bit value."""
    z = (value + _GAMMA) & _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


class SplitMix64:
    """Sequential splitmix64 stream with uniform and gaussian draws."""

    def __init__(self, seed: int):
        self._state = int(seed) & _MASK

    def next_uint64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK
        return z ^ (z >> 31)

    def uniform(self) -> float:
        return (self.next_uint64() >> 11) * 2.0**-53

    def gaussian(self) -> float:
        w1 = self.next_uint64()
        w2 = self.next_uint64()
        u1 = ((w1 >> 11) + 1) * 2.0**-53
        u2 = (w2 >> 11) * 2.0**-53
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def gaussian_vector(self, n: int) -> np.ndarray:
        return np.array([self.gaussian() for _ in range(n)], dtype=float)

    def unit_vector(self, n: int) -> np.ndarray:
        """Uniform direction on the unit sphere (normalized gaussian draw)."""
        while True:
            g = self.gaussian_vector(n)
            norm = float(np.linalg.norm(g))
            if norm > 1e-300:
                return g / norm


def substream_seed(seed: int, index: int) -> int:
    """Seed for the index-th derived stream of a base seed.

    Defined as mix64(seed xor ((index + 1) * 0x9E3779B97F4A7C15 mod 2^64));
    part of the noise-model determinism contract.
    """
    return mix64((int(seed) & _MASK) ^ (((index + 1) * _GAMMA) & _MASK))
