"""Deterministic shuffling for presentation orders.

The generator and the shuffle are both pinned so that any reimplementation
can reproduce a session's presentation order from (n, seed) alone:

* SplitMix64 with the canonical public-domain constants; the stream for
  seed 0 starts 0xE220A8397B1DCDAF, ...
* modern Fisher-Yates walking i = n-1 .. 1 with j = next_u64() mod (i+1).
"""

from __future__ import annotations

from .errors import ValidationError

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """64-bit SplitMix64 generator over Python ints."""

    def __init__(self, seed: int):
        if isinstance(seed, bool) or not isinstance(seed, int):
            raise ValidationError(f"seed must be an integer, got {seed!r}")
        if not (0 <= seed <= _MASK64):
            raise ValidationError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return (z ^ (z >> 31)) & _MASK64

    def next_below(self, bound: int) -> int:
        """Draw from 0..bound-1 by modulo reduction (pinned, bias accepted)."""
        if bound <= 0:
            raise ValidationError(f"bound must be positive, got {bound}")
        return self.next_u64() % bound


def shuffle_order(n: int, seed: int) -> list[int]:
    """Deterministic permutation of 0..n-1 for the given seed."""
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ValidationError(f"n must be a positive integer, got {n!r}")
    rng = SplitMix64(seed)
    order = list(range(n))
    for i in range(n - 1, 0, -1):
        j = rng.next_below(i + 1)
        order[i], order[j] = order[j], order[i]
    return order
