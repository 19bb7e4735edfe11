"""Reproducible per-chain random streams.

Chain i of a run with master seed s always owns the stream spawned as
child i of `SeedSequence(s)`, so a chain's randomness does not depend on
how many other chains run next to it or on thread scheduling.
"""
from __future__ import annotations

import math

import numpy as np

from lshmc.core.typing import FloatArray, IntArray


BLOCK_STEPS = 64


def spawn_generators(seed: int, n: int) -> list[np.random.Generator]:
    """Independent PCG64 generators for chains 0..n-1."""
    return [np.random.Generator(np.random.PCG64(child)) for child in np.random.SeedSequence(seed).spawn(n)]


def chain_generator(seed: int, chain: int) -> np.random.Generator:
    """The generator `spawn_generators(seed, n)[chain]` for any n > chain."""
    child = np.random.SeedSequence(seed, spawn_key=(chain,))
    return np.random.Generator(np.random.PCG64(child))


class EnsembleNoise:
    """Velocities and log-uniforms for many chains, drawn in blocks.

    Each chain refills from its own generator every `block` steps: first
    a (block, d) array of normals, then `block` uniforms. Serving draws
    in blocks keeps the per-step cost a single array operation while the
    randomness of chain i stays a function of its generator alone.
    """

    def __init__(self, generators: list[np.random.Generator], dim: int, block: int = BLOCK_STEPS) -> None:
        self.generators = generators
        self.dim = dim
        self.block = block
        self._v = np.empty((0,))
        self._log_u = np.empty((0,))
        self._cursor = block

    def __len__(self) -> int:
        return len(self.generators)

    def _refill(self) -> None:
        n, b = len(self.generators), self.block
        v = np.empty((b, n, self.dim))
        u = np.empty((b, n))
        for i, gen in enumerate(self.generators):
            v[:, i, :] = gen.standard_normal((b, self.dim))
            u[:, i] = gen.random(b)
        self._v = v
        self._log_u = np.log1p(-u)
        self._cursor = 0

    def next(self) -> tuple[FloatArray, FloatArray]:
        """Velocities of shape (n, d) and log-uniforms of shape (n,) for one step."""
        if self._cursor >= self.block:
            self._refill()
        k = self._cursor
        self._cursor += 1
        return self._v[k], self._log_u[k]

    def integers(self, high: int) -> IntArray:
        """One uniform integer in [0, high) per chain.

        Buffered step draws are discarded so the next step starts a fresh
        block after the integer in every chain's stream.
        """
        self._cursor = self.block
        return np.array([gen.integers(high) for gen in self.generators], dtype=np.int64)


def thinning(k: int, dim: int, budget: int = 1_000_000) -> int:
    """Smallest record interval keeping (k + 1) * dim stored scalars within `budget`."""
    return max(1, math.ceil((k + 1) * dim / budget))


__all__ = ["BLOCK_STEPS", "EnsembleNoise", "chain_generator", "spawn_generators", "thinning"]
