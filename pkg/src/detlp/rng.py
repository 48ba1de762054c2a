"""SplitMix64: a tiny counter-based generator, pinned so instances are
reproducible bit-for-bit in any language.

state <- state + 0x9E3779B97F4A7C15 (mod 2^64), then the output is
mixed by two xor-shift-multiply rounds.  Doubles are ``(z >> 11) * 2^-53``.
"""

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


class SplitMix64:
    def __init__(self, seed):
        self.state = int(seed) & _MASK

    def next_u64(self):
        self.state = (self.state + _GOLDEN) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def random(self):
        """Uniform double in [0, 1)."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform(self, lo, hi, size):
        return [lo + (hi - lo) * self.random() for _ in range(size)]
