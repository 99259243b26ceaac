"""Seeded, portable random number generation.

Every random draw in the package flows through SplitMix64 so that identical
seeds give bit-identical results on any platform, independent of the host
language's RNG. Streams are split with derive_seed rather than by sharing a
generator across concerns.
"""

from __future__ import annotations

import math

MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """64-bit splitmix generator (Steele et al. mixing constants)."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & MASK64
        return z ^ (z >> 31)

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound), rejection-sampled to kill modulo bias."""
        if bound <= 0:
            raise ValueError(f"bound must be positive, got {bound}")
        # accept only draws below the largest multiple of bound
        limit = (MASK64 + 1) - ((MASK64 + 1) % bound)
        while True:
            u = self.next_u64()
            if u < limit:
                return u % bound

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in the inclusive range [lo, hi]."""
        if hi < lo:
            raise ValueError(f"empty range [{lo}, {hi}]")
        return lo + self.below(hi - lo + 1)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def choice(self, seq):
        return seq[self.below(len(seq))]

    def normal(self) -> float:
        """Standard normal via Box-Muller."""
        u1 = self.random()
        while u1 <= 0.0:
            u1 = self.random()
        u2 = self.random()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def lognormal_ms(self, median: float, sigma: float) -> float:
        """Log-normal draw parameterized by its median."""
        return median * math.exp(sigma * self.normal())


def derive_seed(seed: int, *labels: int) -> int:
    """Derive an independent stream seed from a base seed and integer labels.

    derive_seed(s, a, b) != derive_seed(s, b, a) in general; labels name the
    sub-stream (session index, purpose tag, ...).
    """
    s = seed & MASK64
    for lab in labels:
        s = SplitMix64(s ^ ((lab * _GAMMA) & MASK64)).next_u64()
    return s
