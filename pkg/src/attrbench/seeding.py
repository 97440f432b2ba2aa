"""Deterministic seed derivation for hierarchical RNG streams.

Every randomized stage (task generation, each method's sampling on each
evaluation point) draws from its own ``numpy`` generator whose seed is
derived from the root seed plus a stable path of labels.  Re-running with
the same root seed reproduces every stream bit for bit, independent of
execution order or thread count.
"""

from __future__ import annotations

import zlib

import numpy as np

_MASK64 = (1 << 64) - 1


def splitmix64(state: int) -> int:
    """One step of the splitmix64 sequence; a strong 64-bit mixer."""
    z = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _label_to_int(label: int | str) -> int:
    if isinstance(label, int):
        return label & _MASK64
    return zlib.crc32(label.encode("utf-8"))


def derive_seed(root: int, *path: int | str) -> int:
    """Fold a path of labels into a child seed.

    Each label (int or string) perturbs the state before a splitmix64 step,
    so distinct paths give statistically independent streams.
    """
    state = splitmix64(root & _MASK64)
    for label in path:
        state = splitmix64(state ^ _label_to_int(label))
    return state


def rng_for(root: int, *path: int | str) -> np.random.Generator:
    return np.random.default_rng(derive_seed(root, *path))
