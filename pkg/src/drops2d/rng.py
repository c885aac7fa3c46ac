"""Counter-based deterministic random numbers (SplitMix64).

The randomized test suites draw every number as a pure function of
``(seed, counter)`` so that runs are reproducible and the exact stream can be
re-implemented in another language from this file alone.

The generator is the standard SplitMix64 finalizer: for draw ``j`` of stream
``seed``::

    z = (seed + (j + 1) * 0x9E3779B97F4A7C15) mod 2^64
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 mod 2^64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB mod 2^64
    z = z ^ (z >> 31)

``uniform`` maps ``z`` to [0, 1) via the top 53 bits.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def splitmix64(seed: int, counter: int) -> int:
    """Return the 64-bit output for draw ``counter`` of stream ``seed``."""
    z = (seed + (counter + 1) * _GAMMA) & _MASK
    z = ((z ^ (z >> 30)) * _M1) & _MASK
    z = ((z ^ (z >> 27)) * _M2) & _MASK
    return z ^ (z >> 31)


class CounterRng:
    """Sequential view over the counter-based stream.

    Instances advance an internal counter, but any value can be recomputed
    from ``splitmix64(seed, j)`` alone.
    """

    def __init__(self, seed: int, counter: int = 0):
        self.seed = seed & _MASK
        self.counter = counter

    def next_u64(self) -> int:
        z = splitmix64(self.seed, self.counter)
        self.counter += 1
        return z

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        u = self.next_u64() >> 11  # top 53 bits
        return lo + (hi - lo) * (u * 2.0 ** -53)

    def substream(self, index: int) -> "CounterRng":
        """Independent stream for item ``index`` (used per test region)."""
        return CounterRng(splitmix64(self.seed, (1 << 32) + index))
