"""Deterministic randomness for experiments.

A single counter-based generator (Philox) is seeded per run; children are
split off deterministically by index so that parallel trials are replayable.
Every sampled decision increments a draw counter that transcripts can log.
"""
from __future__ import annotations

import numpy as np

from .bits import BitString


class RandomSource:
    """Splittable, draw-counting wrapper around a Philox generator."""

    def __init__(self, seed: int, path: tuple[int, ...] = ()):
        self.seed = seed
        self.path = path
        self._gen = np.random.Generator(
            np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=path))
        )
        self.draws = 0

    def spawn(self, index: int) -> "RandomSource":
        """Independent child stream; deterministic in (seed, path, index)."""
        return RandomSource(self.seed, self.path + (index,))

    # -- draws ---------------------------------------------------------------

    def bit(self) -> int:
        self.draws += 1
        return int(self._gen.integers(0, 2))

    def bitstring(self, width: int) -> BitString:
        self.draws += 1
        if width == 0:
            return BitString(0, 0)
        data = self._gen.bytes((width + 7) // 8)
        return BitString.from_bytes(bytes(data), width)

    def key(self, nbytes: int = 16) -> bytes:
        self.draws += 1
        return bytes(self._gen.bytes(nbytes))

    def integer(self, upper: int) -> int:
        """Uniform int in [0, upper)."""
        self.draws += 1
        return int(self._gen.integers(0, upper))

    def uniform(self) -> float:
        self.draws += 1
        return float(self._gen.random())

    def subset(self, n: int, k: int) -> frozenset[int]:
        """Uniform k-element subset of range(n)."""
        self.draws += 1
        picked = self._gen.choice(n, size=k, replace=False)
        return frozenset(int(x) for x in picked)

    def choose_weighted(self, weights: list[float]) -> int:
        """Index sampled proportionally to non-negative weights."""
        total = sum(weights)
        if total <= 0:
            raise ValueError("no positive weight to sample from")
        x = self.uniform() * total
        acc = 0.0
        for i, w in enumerate(weights):
            acc += w
            if x < acc:
                return i
        return len(weights) - 1
