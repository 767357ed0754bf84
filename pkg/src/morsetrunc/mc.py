"""Deterministic sharded Monte Carlo accumulation.

A run of ``total`` samples is cut into shards of a fixed size.  Shard ``i``
draws from ``SeedSequence(seed, spawn_key=(i,))`` and the per-shard
moments are merged in shard order, so the result does not depend on how
many worker threads evaluated the shards.
"""

from __future__ import annotations

import os
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ZeroSamples

DEFAULT_SHARD_SIZE = 1 << 16
THREADS_ENV = "MORSETRUNC_THREADS"


def resolve_threads(threads: int | None = None) -> int:
    """Explicit value, else ``$MORSETRUNC_THREADS``, else 1."""
    if threads is None:
        raw = os.environ.get(THREADS_ENV, "").strip()
        if not raw:
            return 1
        try:
            threads = int(raw)
        except ValueError as exc:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from exc
    if threads < 1:
        raise ValueError("thread count must be >= 1")
    return threads


@dataclass
class ColumnMoments:
    """Count, means and centred second moments of a block of columns."""

    count: int
    mean: np.ndarray
    m2: np.ndarray

    @classmethod
    def from_block(cls, block: np.ndarray) -> "ColumnMoments":
        block = np.asarray(block, dtype=float)
        if block.ndim == 1:
            block = block[:, None]
        mean = block.mean(axis=0)
        m2 = ((block - mean) ** 2).sum(axis=0)
        return cls(block.shape[0], mean, m2)

    def merge(self, other: "ColumnMoments") -> "ColumnMoments":
        # pairwise update (Chan et al.)
        n = self.count + other.count
        if other.count == 0:
            return self
        if self.count == 0:
            return other
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.count / n)
        m2 = self.m2 + other.m2 + delta**2 * (self.count * other.count / n)
        return ColumnMoments(n, mean, m2)

    @property
    def variance(self) -> np.ndarray:
        """Unbiased sample variance per column."""
        if self.count < 2:
            return np.zeros_like(self.mean)
        return self.m2 / (self.count - 1)

    @property
    def stderr(self) -> np.ndarray:
        if self.count == 0:
            return np.zeros_like(self.mean)
        return np.sqrt(self.variance / self.count)


def shard_counts(total: int, shard_size: int = DEFAULT_SHARD_SIZE) -> list[int]:
    if shard_size < 1:
        raise ValueError("shard size must be >= 1")
    full, rest = divmod(total, shard_size)
    return [shard_size] * full + ([rest] if rest else [])


def sharded_moments(
    draw: Callable[[np.random.SeedSequence, int], np.ndarray],
    total: int,
    seed: int,
    threads: int | None = None,
    shard_size: int = DEFAULT_SHARD_SIZE,
) -> ColumnMoments:
    """Run ``draw(seed_seq, count)`` over all shards and merge column moments.

    ``draw`` returns an array of shape ``(count,)`` or ``(count, c)``.
    """
    if total < 1:
        raise ZeroSamples("Monte Carlo integration needs at least one sample")
    counts = shard_counts(total, shard_size)

    def work(i: int) -> ColumnMoments:
        seq = np.random.SeedSequence(seed, spawn_key=(i,))
        return ColumnMoments.from_block(draw(seq, counts[i]))

    workers = resolve_threads(threads)
    if workers == 1 or len(counts) == 1:
        parts = [work(i) for i in range(len(counts))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, range(len(counts))))
    acc = parts[0]
    for part in parts[1:]:
        acc = acc.merge(part)
    return acc


__all__ = [
    "ColumnMoments",
    "DEFAULT_SHARD_SIZE",
    "THREADS_ENV",
    "resolve_threads",
    "shard_counts",
    "sharded_moments",
]
