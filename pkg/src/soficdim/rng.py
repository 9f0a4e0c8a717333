"""Deterministic, portable pseudo-randomness.

Every seeded behaviour in this package (random partitions, Monte Carlo
sampling, random partial permutations, seeded block bijections) flows
through :class:`SplitMix64`, a tiny 64-bit counter-based generator with
fixed published constants.  It is used instead of ``random.Random`` so
that results are reproducible bit for bit across platforms and Python
versions, and so that independent substreams can be split off cheaply
by index (one substream per Monte Carlo trial, per sweep instance, ...).

Weighted choices against exact rational weights are decided by integer
cross-multiplication, so the sampling itself introduces no rounding.
"""

from __future__ import annotations

from fractions import Fraction

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def mix64(x: int) -> int:
    """One-shot SplitMix64 finalizer; a 64-bit bijective scramble."""
    z = (x + _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


class SplitMix64:
    """SplitMix64 generator with 64-bit state.

    ``next64`` steps the counter by the golden-ratio increment and
    scrambles it.  All derived draws (``below``, ``shuffle``,
    ``weighted_index``) are built only from ``next64``.
    """

    __slots__ = ("seed", "_state")

    def __init__(self, seed: int):
        self.seed = seed & _MASK
        self._state = self.seed

    def next64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def spawn(self, index: int) -> "SplitMix64":
        """Independent substream determined by (seed, index) only."""
        return SplitMix64(mix64(self.seed ^ mix64(index & _MASK)))

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection; exact, no modulo bias."""
        if n <= 0:
            raise ValueError("below() needs a positive bound")
        limit = ((1 << 64) // n) * n
        while True:
            u = self.next64()
            if u < limit:
                return u % n

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]

    def choose_sorted(self, n: int, k: int) -> list[int]:
        """A uniform k-subset of range(n), returned sorted."""
        if not 0 <= k <= n:
            raise ValueError("invalid subset size")
        pool = list(range(n))
        for i in range(k):
            j = i + self.below(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return sorted(pool[:k])

    def weighted_index(self, weights) -> int:
        """Index i with exact probability weights[i] (Fractions summing to 1).

        The draw u/2^64 is compared against cumulative sums by integer
        cross-multiplication, so the thresholds are honoured exactly.
        """
        u = self.next64()
        acc = Fraction(0)
        last = 0
        for i, w in enumerate(weights):
            acc += w
            # u / 2^64 < acc  <=>  u * acc.den < acc.num << 64
            if u * acc.denominator < acc.numerator << 64:
                return i
            last = i
        return last
