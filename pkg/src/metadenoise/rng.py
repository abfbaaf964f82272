"""Seeded, hierarchical random streams.

Every source of randomness in the package is an `RngStream` addressed by a
root seed plus a derivation path, e.g. ``RngStream(7).child("group", 3)``.
Streams with distinct (seed, path) tuples are statistically independent, and
drawing from one never advances another, so results do not depend on the
order in which components consume randomness.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1

PathPart = int | str


def _part_to_entropy(part: PathPart) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part) & _MASK64
    if isinstance(part, str):
        digest = hashlib.sha256(part.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "little")
    raise TypeError(f"stream path parts must be int or str, got {type(part).__name__}")


class RngStream:
    """A reproducible random stream identified by (seed, path).

    The underlying generator (counter-based Philox) is created lazily on
    first draw; `child` derives a new independent stream without touching
    this one.
    """

    __slots__ = ("seed", "path", "_gen")

    def __init__(self, seed: int, path: tuple[PathPart, ...] = ()):
        self.seed = int(seed) & _MASK64
        self.path = tuple(path)
        for part in self.path:
            _part_to_entropy(part)  # validate early
        self._gen: np.random.Generator | None = None

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, path={self.path!r})"

    def child(self, *parts: PathPart) -> "RngStream":
        return RngStream(self.seed, self.path + parts)

    @property
    def generator(self) -> np.random.Generator:
        if self._gen is None:
            entropy = [self.seed] + [_part_to_entropy(p) for p in self.path]
            self._gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
        return self._gen

    # Convenience proxies; all draws consume this stream's generator only.
    def normal(self, loc: float = 0.0, scale: float = 1.0, size=None):
        return self.generator.normal(loc, scale, size)

    def uniform(self, low: float = 0.0, high: float = 1.0, size=None):
        return self.generator.uniform(low, high, size)

    def integers(self, low: int, high: int | None = None, size=None):
        return self.generator.integers(low, high, size)

    def permutation(self, n: int) -> np.ndarray:
        return self.generator.permutation(n)

    def choice_without_replacement(self, n: int, k: int) -> np.ndarray:
        return self.generator.choice(n, size=k, replace=False)

    def fresh_seed(self) -> int:
        """Draw a 64-bit seed, e.g. to stamp a sampled noise task."""
        return int(self.generator.integers(0, 1 << 63, dtype=np.uint64))
