"""Functional-ANOVA decomposition on finite grids."""

import numpy as np
import pytest

from attrbench.fanova import fanova_decompose, fanova_reconstruct
from attrbench.subsets import FeatureSet


def by_indices(components):
    return {fs.indices(): np.asarray(part) for fs, part in components.items()}


def test_and_grid_components():
    comp = by_indices(fanova_decompose([[0.0, 0.0], [0.0, 1.0]]))
    assert comp[()].ravel() == pytest.approx([0.25])
    assert comp[(0,)].ravel() == pytest.approx([-0.25, 0.25])
    assert comp[(1,)].ravel() == pytest.approx([-0.25, 0.25])
    assert comp[(0, 1)].ravel() == pytest.approx([0.25, -0.25, -0.25, 0.25])


def test_reconstruction_exact_on_random_grids():
    rng = np.random.default_rng(8)
    for shape in [(3,), (2, 4), (3, 3, 2), (2, 2, 2, 2)]:
        grid = rng.standard_normal(shape)
        comp = fanova_decompose(grid)
        assert len(comp) == 1 << len(shape)
        back = fanova_reconstruct(comp)
        np.testing.assert_allclose(back, grid, atol=1e-12)


def test_components_zero_centered_along_own_axes():
    rng = np.random.default_rng(9)
    grid = rng.standard_normal((3, 2, 4))
    for fs, part in fanova_decompose(grid).items():
        for axis in fs.indices():
            np.testing.assert_allclose(
                part.sum(axis=axis), 0.0, atol=1e-12
            )


def test_constant_axis_kills_interactions():
    # grid constant along axis 1: any component involving it is zero
    base = np.array([[1.0, 1.0], [4.0, 4.0], [9.0, 9.0]])
    comp = fanova_decompose(base)
    for fs, part in comp.items():
        if 1 in fs:
            np.testing.assert_allclose(part, 0.0, atol=1e-12)
    assert comp[FeatureSet.empty(2)].ravel()[0] == pytest.approx(14 / 3)


def test_single_axis_grid():
    comp = by_indices(fanova_decompose([1.0, 2.0, 6.0]))
    assert comp[()].ravel() == pytest.approx([3.0])
    assert comp[(0,)].ravel() == pytest.approx([-2.0, -1.0, 3.0])


def test_grid_validation():
    with pytest.raises(ValueError):
        fanova_decompose(np.zeros((2, 2, 2, 2, 2)))
    with pytest.raises(ValueError):
        fanova_decompose(np.zeros((2, 5)))
    with pytest.raises(ValueError):
        fanova_reconstruct({})
