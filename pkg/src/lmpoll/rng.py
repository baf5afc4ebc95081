"""Deterministic pseudo-randomness built on SplitMix64.

Every stochastic operation in this package draws from this module so that a
(seed, operation) pair pins the output bit-for-bit across platforms and
Python versions. The stdlib Mersenne generator is deliberately avoided: its
float path is not reproducible across implementations and cannot be split
into independent child streams.

The generator state advances by the 64-bit golden-ratio constant and each
output is the SplitMix64 finalizer of the state. Child seeds for element i
of a batch are ``mix64(seed XOR (i+1)*GOLDEN mod 2**64)``, which keeps
sibling streams decorrelated while remaining order-independent: worker j can
compute child j without generating children 0..j-1 first.
"""

from __future__ import annotations

from .errors import ArgumentError

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15
_INV_2_53 = 1.0 / 9007199254740992.0  # 2**-53


def mix64(z: int) -> int:
    """SplitMix64 finalizer: avalanche a 64-bit value."""
    z &= MASK64
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & MASK64
    return z ^ (z >> 31)


def child_seed(seed: int, index: int) -> int:
    """Seed for the index-th child stream of `seed`."""
    if index < 0:
        raise ArgumentError(f"child index must be >= 0, got {index}")
    return mix64((seed ^ ((index + 1) * GOLDEN & MASK64)) & MASK64)


def check_seed(seed: int) -> int:
    """Validate a user-supplied seed (must fit in an unsigned 64-bit word)."""
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ArgumentError(f"seed must be an integer, got {type(seed).__name__}")
    if not 0 <= seed <= MASK64:
        raise ArgumentError(f"seed must be in [0, 2**64), got {seed}")
    return seed


class SplitMix64:
    """Sequential SplitMix64 stream.

    >>> g = SplitMix64(0)
    >>> g.next_uint64() == mix64(GOLDEN)
    True
    """

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = check_seed(seed)

    def next_uint64(self) -> int:
        self._state = (self._state + GOLDEN) & MASK64
        return mix64(self._state)

    def next_float(self) -> float:
        """Uniform in [0, 1): top 53 bits of the next output."""
        return (self.next_uint64() >> 11) * _INV_2_53

    def next_below(self, bound: int) -> int:
        """Uniform integer in [0, bound) via modulo reduction.

        The modulo bias is at most bound/2**64, which is far below any
        tolerance used here; the trade is made for cross-platform simplicity.
        """
        if bound <= 0:
            raise ArgumentError(f"bound must be positive, got {bound}")
        return self.next_uint64() % bound

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_below(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample_indices(self, population: int, k: int) -> list[int]:
        """k distinct indices from range(population), order as drawn.

        Partial Fisher-Yates: index t swaps with a uniform pick from
        [t, population), so the first k slots are a uniform sample without
        replacement.
        """
        if not 0 <= k <= population:
            raise ArgumentError(
                f"cannot sample {k} items from a population of {population}"
            )
        idx = list(range(population))
        for t in range(k):
            j = t + self.next_below(population - t)
            idx[t], idx[j] = idx[j], idx[t]
        return idx[:k]
