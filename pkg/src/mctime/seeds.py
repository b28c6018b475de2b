"""Deterministic seeding built on splitmix64.

Dataset splitting and per-stage seed derivation go through one explicitly
specified 64-bit mixing generator (splitmix64) instead of a library RNG, so
the resulting partitions and seed streams are identical on every platform
and in every language that reimplements the same integer recurrence.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(state: int) -> tuple[int, int]:
    """One splitmix64 step; returns (output value, next state)."""
    state = (state + _GOLDEN) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31), state


def _fnv1a64(text: str) -> int:
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & _MASK64
    return h


def derive_seed(master_seed: int, stage: str, index: int = 0) -> int:
    """Fold a stage tag and a member index into a master seed.

    The stage name is FNV-1a hashed, XOR-folded with the master seed and a
    golden-ratio multiple of (index + 1), then passed through one splitmix64
    step. Every pipeline stage documents the (stage, index) pair it uses, so
    a run is fully reproducible from the master seed alone.
    """
    state = (int(master_seed) ^ _fnv1a64(stage) ^ ((index + 1) * _GOLDEN)) & _MASK64
    value, _ = splitmix64(state)
    return value


def shuffled_indices(n: int, seed: int) -> np.ndarray:
    """Fisher-Yates shuffle of range(n), driven by splitmix64.

    Bounded draws use plain modulo; the bias is immaterial for shuffling and
    keeping the recurrence trivial is what makes it portable.
    """
    order = np.arange(n, dtype=np.int64)
    state = int(seed) & _MASK64
    for i in range(n - 1, 0, -1):
        value, state = splitmix64(state)
        j = value % (i + 1)
        order[i], order[j] = order[j], order[i]
    return order
