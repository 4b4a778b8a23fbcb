"""
Seeded pseudo-random stream for instance generation.

Purpose: Bit-exact, platform-independent draws. SplitMix64 with the
constants below; integers in [low, high] are drawn as
``next() % (high - low + 1) + low``.
"""
from typing import List

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX_1 = 0xBF58476D1CE4E5B9
MIX_2 = 0x94D049BB133111EB


class SplitMix64:
    """64-bit generator; the state advances by the golden gamma per draw."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * MIX_1) & MASK64
        z = ((z ^ (z >> 27)) * MIX_2) & MASK64
        return z ^ (z >> 31)

    def draw(self, low: int, high: int) -> int:
        if high < low:
            raise ValueError(f"empty range [{low}, {high}]")
        return self.next() % (high - low + 1) + low

    def draws(self, count: int, low: int, high: int) -> List[int]:
        return [self.draw(low, high) for _ in range(count)]
