"""Exact functional-ANOVA decomposition on finite uniform product grids.

Decomposes grid values into one subfunction per index subset so that the
sum reconstructs the grid and every non-constant subfunction averages to
zero along each of its own axes. Grid axis i corresponds to coordinate i.
The empty-subset component is the grand mean; the zero-centering is what
makes the decomposition unique, and also what divorces it from
instance-wise selection: a component can be non-zero at points whose
minimal selection does not contain its subset.
"""

from __future__ import annotations

import numpy as np

from .subsets import FeatureSet, popcount, submasks

MAX_GRID_DIM = 4
MAX_AXIS_LEVELS = 4


def fanova_decompose(values) -> dict[FeatureSet, np.ndarray]:
    """Map each index subset to its component, full grid shape (broadcast).

    Computed by ascending-subset recursion: the component for I is the
    conditional mean of the grid given the I coordinates, minus every
    component of a strict subset of I.
    """
    grid = np.asarray(values, dtype=float)
    if grid.ndim < 1 or grid.ndim > MAX_GRID_DIM:
        raise ValueError(f"grid must have 1..{MAX_GRID_DIM} axes, got {grid.ndim}")
    if any(levels < 1 or levels > MAX_AXIS_LEVELS for levels in grid.shape):
        raise ValueError(f"each axis must have 1..{MAX_AXIS_LEVELS} levels, got {grid.shape}")
    n = grid.ndim
    components: dict[int, np.ndarray] = {}
    for mask in sorted(range(1 << n), key=popcount):
        dropped = tuple(i for i in range(n) if not mask >> i & 1)
        part = grid.mean(axis=dropped, keepdims=True)
        for sub in submasks(mask):
            if sub != mask:
                part = part - components[sub]
        components[mask] = part
    return {FeatureSet(mask, n): part for mask, part in components.items()}


def fanova_reconstruct(components: dict[FeatureSet, np.ndarray]) -> np.ndarray:
    """Sum of all components, broadcast back to the full grid shape."""
    if not components:
        raise ValueError("nothing to reconstruct")
    total = None
    for part in components.values():
        total = part if total is None else total + part
    return np.asarray(total)
