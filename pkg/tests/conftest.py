"""Shared builders for hand-crafted tasks used across the test modules.

Coordinates follow the generator's slot grid: coordinate = sigma * (slot
+ 0.5), so hand-built tasks are geometrically identical to generated ones.
"""

import numpy as np
import pytest

from attrbench.subsets import FeatureSet
from attrbench.taskgen import GENERATOR_VERSION, Centroid, Task

SIGMA = 0.25


def slot_coords(slots):
    return tuple(SIGMA * (s + 0.5) for s in slots)


def make_task(rows, task_id="hand", noise_ratio=0.5, n=None):
    """Build a task from (slots, label, selection-indices) rows."""
    n = n if n is not None else len(rows[0][0])
    centroids = tuple(
        Centroid(slot_coords(slots), label, FeatureSet.from_indices(sel, n), 0)
        for slots, label, sel in rows
    )
    return Task(
        id=task_id,
        n=n,
        sigma=SIGMA,
        noise_std=SIGMA * noise_ratio,
        seed=0,
        generator_version=GENERATOR_VERSION,
        centroids=centroids,
    )


@pytest.fixture
def eroded_square():
    """2-cube with one vertex deleted: selections {0,1}, {1}, {0}."""
    return make_task(
        [
            ((0, 0), 0, [0, 1]),
            ((0, 1), 1, [1]),
            ((1, 0), 1, [0]),
        ],
        task_id="eroded_square",
        noise_ratio=1 / 64,
    )


@pytest.fixture
def xor_square():
    """Intact 2-cube, slots symmetric about the origin; every selection
    is the full pair."""
    return make_task(
        [
            ((-1, -1), 0, [0, 1]),
            ((-1, 1), 1, [0, 1]),
            ((1, -1), 1, [0, 1]),
            ((1, 1), 0, [0, 1]),
        ],
        task_id="xor_square",
    )


@pytest.fixture
def single_class():
    """Both centroids carry label 1; posteriors are identically one."""
    return make_task(
        [((0, 0), 1, [0]), ((1, 1), 1, [0])],
        task_id="single_class",
    )


@pytest.fixture
def and_relation():
    from attrbench.relation import LabeledRelation

    return LabeledRelation.from_pairs(
        [((0, 0), 0), ((0, 1), 0), ((1, 0), 0), ((1, 1), 1)], 2
    )


def centroid_point(task, j):
    return np.asarray(task.centroids[j].coords)
