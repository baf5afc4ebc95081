"""Child-seed derivation shared with the polling client, bit for bit.

The wire protocol hands the server one 64-bit seed per request. Completion
i of the request draws from an independent stream seeded with
``mix64(seed XOR (i+1)*GOLDEN mod 2**64)``, the SplitMix64 finalizer over
a golden-ratio offset. Reimplemented here rather than imported so that
this package touches the client only through HTTP.
"""

from __future__ import annotations

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    """SplitMix64 finalizer: avalanche a 64-bit value."""
    z &= MASK64
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & MASK64
    return z ^ (z >> 31)


def child_seed(seed: int, index: int) -> int:
    """Seed for the index-th child stream of `seed`."""
    if index < 0:
        raise ValueError(f"child index must be >= 0, got {index}")
    return mix64((seed ^ ((index + 1) * GOLDEN & MASK64)) & MASK64)
