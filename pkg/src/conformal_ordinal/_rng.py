"""Platform-stable permutation used by the dataset splitter.

The generator is SplitMix64 (Steele, Lea & Flood 2014), chosen because its
seed-to-sequence mapping is fixed by a handful of integer operations and does
not depend on numpy's versioned stream guarantees. Shuffled order is part of
the split file contract, so do not change anything here without bumping it.
"""

_MASK = (1 << 64) - 1


class SplitMix64:
    """Minimal SplitMix64 stream over unsigned 64-bit outputs."""

    def __init__(self, seed: int):
        if not 0 <= seed <= _MASK:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self.state = seed

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def below(self, m: int) -> int:
        """Uniform integer in ``[0, m)`` by rejection, no modulo bias."""
        limit = ((1 << 64) // m) * m
        while True:
            x = self.next_u64()
            if x < limit:
                return x % m


def permutation(n: int, seed: int) -> list:
    """Fisher-Yates permutation of ``range(n)`` driven by SplitMix64."""
    rng = SplitMix64(seed)
    order = list(range(n))
    for i in range(n - 1, 0, -1):
        j = rng.below(i + 1)
        order[i], order[j] = order[j], order[i]
    return order
