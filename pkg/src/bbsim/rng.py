"""Fixed 64-bit counter-based random generator used everywhere randomness is needed.

The generator is specified by algorithm, not by library, so identical seeds
produce identical scenarios and search rollouts on every platform:

* ``mix64`` is the SplitMix64 finalizer (Steele, Lea & Flood).
* A stream with key ``k`` outputs ``mix64((k + i * GAMMA) mod 2^64)`` for
  i = 1, 2, ... where GAMMA = 0x9E3779B97F4B7C15 (the 64-bit golden ratio).
* Sub-streams are split off by folding integers into the key with ``derive``.
* Uniform floats use the top 53 bits divided by 2^53, giving values in [0, 1).
"""

from __future__ import annotations

_MASK = 0xFFFFFFFFFFFFFFFF
GAMMA = 0x9E3779B97F4B7C15
_INV_2_53 = 1.0 / (1 << 53)


def mix64(x: int) -> int:
    """SplitMix64 finalizer: bijective avalanche mix of a 64-bit word."""
    x &= _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def derive(key: int, *parts: int) -> int:
    """Fold integers into a key, producing an independent sub-stream key."""
    k = key & _MASK
    for p in parts:
        k = mix64((k + GAMMA) ^ (p & _MASK))
    return k


class Stream:
    """Sequential view over the counter-based stream with key ``key``."""

    __slots__ = ("key", "counter")

    def __init__(self, key: int):
        self.key = key & _MASK
        self.counter = 0

    def next_u64(self) -> int:
        self.counter += 1
        return mix64(self.key + self.counter * GAMMA)

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        """Uniform float in [lo, hi) via 53-bit mantissa division."""
        u = (self.next_u64() >> 11) * _INV_2_53
        return lo + u * (hi - lo)

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi] (modulo reduction; span << 2^64)."""
        if hi < lo:
            raise ValueError("empty integer range")
        return lo + self.next_u64() % (hi - lo + 1)

    def choice_index(self, n: int) -> int:
        return self.next_u64() % n

    def split(self, *parts: int) -> "Stream":
        return Stream(derive(self.key, self.counter, *parts))
