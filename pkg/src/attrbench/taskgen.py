"""Synthetic classification tasks with unique instance-wise ground truths.

Centroids sit on an integer slot grid (coordinate = sigma * (slot + 0.5),
so the grid is symmetric around zero and all occupied values on an axis
are at least sigma apart). Each task superposes axis-aligned hypercubes
whose occupied slots are disjoint across cubes on every axis, including
the fixed coordinates of axes the cube does not span; two centroids from
different cubes therefore differ on every coordinate. Cube vertices are
two-colored so that coordinate-adjacent vertices always disagree, then
eroded: every vertex is independently deleted with a fixed probability,
which diversifies the per-vertex minimal selections.

Erosion can produce survivors whose neighbor-derived selection claim fails
(isolated vertices, or odd-distance opposite-label survivors sneaking into
the projection group), so the exact solver is the validation authority:
every emitted centroid's stored selection is the unique minimal solution
on the induced relation, re-checked on the assembled task.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .relation import LabeledRelation, check_property1, solve_instance_selection
from .seeding import derive_seed
from .subsets import MAX_DIM, FeatureSet

GENERATOR_VERSION = "1"


class GenerationError(RuntimeError):
    """Retry budget exhausted while searching for a valid task."""


class CapacityError(RuntimeError):
    """No free coordinate slot left on some axis."""


class TaskFormatError(ValueError):
    """A task file violates the on-disk schema."""


@dataclass(frozen=True)
class Hypercube:
    """Geometry of one placed cube: spanned axes, per-axis occupied value
    pair, fixed values on the remaining axes, and the coloring parity."""

    axes: FeatureSet
    anchor_coords: tuple[tuple[float, float], ...]
    fixed_coords: tuple[tuple[int, float], ...]
    parity: int

    def __post_init__(self) -> None:
        if any(low == high for low, high in self.anchor_coords):
            raise ValueError("per-axis occupied values must be distinct")
        if len(self.anchor_coords) != len(self.axes):
            raise ValueError("one coordinate pair per spanned axis")


@dataclass(frozen=True)
class Centroid:
    coords: tuple[float, ...]
    label: int
    selection: FeatureSet
    hypercube_id: int


@dataclass(frozen=True)
class Task:
    id: str
    n: int
    sigma: float
    noise_std: float
    seed: int
    generator_version: str
    centroids: tuple[Centroid, ...]

    @property
    def m(self) -> int:
        return len(self.centroids)


@dataclass(frozen=True)
class GenConfig:
    """Generator knobs. None means dimension-dependent default.

    max_cube_dim defaults to min(n, 5): cube dimension bounds the selection
    cardinality, and capping it keeps vertex counts (2^dim per cube) and
    downstream subset enumerations tractable while still exercising
    selections well past pairwise order.

    Cube dimensions are drawn from a fixed weight profile rather than
    uniformly: a d-cube contributes up to 2^d centroids, so a uniform draw
    over d makes high-order selections dominate the emitted points. The
    profile leans on pairs and triples, keeps singletons present, and
    leaves enough mass at the cap to separate the bounded-order selectors.
    """

    max_cubes: int | None = None
    max_cube_dim: int | None = None
    p_erode: float = 0.2
    sigma: float = 0.25
    noise_ratio: float = 0.5
    erosion_retries: int = 32
    task_retries: int = 16

    def resolved(self, n: int) -> "GenConfig":
        cubes = self.max_cubes if self.max_cubes is not None else n + 2
        dim = self.max_cube_dim if self.max_cube_dim is not None else min(n, 5)
        cfg = replace(self, max_cubes=cubes, max_cube_dim=min(dim, n))
        if cfg.max_cubes < 1 or cfg.max_cube_dim < 1:
            raise ValueError("max_cubes and max_cube_dim must be >= 1")
        if not 0.0 <= cfg.p_erode < 1.0:
            raise ValueError("erosion probability must lie in [0, 1)")
        if cfg.sigma <= 0 or cfg.noise_ratio <= 0:
            raise ValueError("sigma and noise_ratio must be positive")
        return cfg


def _slot_to_coord(slot: int, sigma: float) -> float:
    return sigma * (slot + 0.5)


def _draw_free_slots(
    free: list[int], count: int, rng: np.random.Generator
) -> list[int]:
    if len(free) < count:
        raise CapacityError("no free coordinate slot on axis")
    picked = rng.choice(len(free), size=count, replace=False)
    return [free[i] for i in sorted(int(p) for p in picked)]


def build_hypercube(
    n: int,
    axes: FeatureSet,
    occupancy: dict[int, set[int]],
    rng: np.random.Generator,
    sigma: float,
    slot_pool: Sequence[int],
) -> tuple[Hypercube, list[tuple[int, tuple[int, ...], int]]]:
    """Place one cube on free slots and two-color its vertices.

    Returns the cube plus its vertices as (code, slot vector, label): bit b
    of `code` says whether the vertex takes the high slot on spanned axis b.
    A vertex label is the parity of its high-coordinate count XOR the cube
    parity bit, so crossing any single edge flips the label. Chosen slots
    are registered in `occupancy`; a full axis raises CapacityError.
    """
    if len(axes) < 1:
        raise ValueError("a cube must span at least one axis")
    spanned = axes.indices()
    pairs: dict[int, tuple[int, int]] = {}
    fixed: dict[int, int] = {}
    staged: dict[int, list[int]] = {}
    for axis in range(n):
        free = sorted(set(slot_pool) - occupancy[axis])
        if axis in axes:
            low, high = _draw_free_slots(free, 2, rng)
            pairs[axis] = (low, high)
            staged[axis] = [low, high]
        else:
            (value,) = _draw_free_slots(free, 1, rng)
            fixed[axis] = value
            staged[axis] = [value]
    for axis, slots in staged.items():
        occupancy[axis].update(slots)
    parity = int(rng.integers(0, 2))
    cube = Hypercube(
        axes=axes,
        anchor_coords=tuple(
            (_slot_to_coord(pairs[a][0], sigma), _slot_to_coord(pairs[a][1], sigma))
            for a in spanned
        ),
        fixed_coords=tuple((a, _slot_to_coord(fixed[a], sigma)) for a in sorted(fixed)),
        parity=parity,
    )
    vertices = []
    for code in range(1 << len(spanned)):
        slots = [0] * n
        for axis, value in fixed.items():
            slots[axis] = value
        for b, axis in enumerate(spanned):
            slots[axis] = pairs[axis][code >> b & 1]
        label = (code.bit_count() & 1) ^ parity
        vertices.append((code, tuple(slots), label))
    return cube, vertices


def erode(
    codes: Sequence[int], dim: int, p_erode: float, rng: np.random.Generator
) -> dict[int, int]:
    """Delete each vertex independently with probability p_erode.

    Maps each surviving code to the bitmask (over the cube's own axes) of
    directions along which an adjacent vertex also survived; that mask is
    the survivor's provisional selection, pending solver validation.
    """
    if not 0.0 <= p_erode < 1.0:
        raise ValueError("erosion probability must lie in [0, 1)")
    kept = [code for code in codes if float(rng.random()) >= p_erode]
    alive = set(kept)
    return {
        code: sum(1 << b for b in range(dim) if code ^ (1 << b) in alive)
        for code in kept
    }


def _cube_centroids(
    n: int,
    cube_id: int,
    axes: FeatureSet,
    vertices: list[tuple[int, tuple[int, ...], int]],
    survivors: dict[int, int],
    sigma: float,
) -> list[Centroid] | None:
    """Validate one eroded cube in isolation and emit its centroids.

    Cross-cube point pairs differ on every axis, so any non-empty subset
    separates them; validating the cube's own relation is therefore exact
    for the whole task as long as every survivor keeps a neighbor. Returns
    None when erosion left an isolated survivor, fewer than two vertices,
    or a neighbor mask that is not the solver's unique minimum.
    """
    if len(survivors) < 2:
        return None
    if any(mask == 0 for mask in survivors.values()):
        return None
    spanned = axes.indices()
    by_code = {code: (slots, label) for code, slots, label in vertices}
    kept = sorted(survivors)
    coords = [
        tuple(_slot_to_coord(s, sigma) for s in by_code[code][0]) for code in kept
    ]
    labels = [by_code[code][1] for code in kept]
    relation = LabeledRelation.from_pairs(zip(coords, labels), n)
    centroids: list[Centroid] = []
    for row, code in enumerate(kept):
        claim = FeatureSet.from_indices(
            (spanned[b] for b in range(len(spanned)) if survivors[code] >> b & 1), n
        )
        solution = solve_instance_selection(relation, row)
        if len(solution.minimal_sets) != 1 or solution.minimal_sets[0] != claim:
            return None
        centroids.append(Centroid(coords[row], labels[row], claim, cube_id))
    return centroids


_DIM_WEIGHTS = (0.10, 0.35, 0.25, 0.18, 0.12)


def _dim_probabilities(max_dim: int) -> np.ndarray:
    weights = [
        _DIM_WEIGHTS[d - 1] if d <= len(_DIM_WEIGHTS) else _DIM_WEIGHTS[-1] * 0.5 ** (d - len(_DIM_WEIGHTS))
        for d in range(1, max_dim + 1)
    ]
    probs = np.asarray(weights, dtype=np.float64)
    return probs / probs.sum()


def _build_once(
    n: int, cfg: GenConfig, rng: np.random.Generator
) -> list[Centroid] | None:
    occupancy: dict[int, set[int]] = {axis: set() for axis in range(n)}
    slot_pool = range(-(cfg.max_cubes + 1), cfg.max_cubes + 1)
    cube_count = int(rng.integers(1, cfg.max_cubes + 1))
    dim_probs = _dim_probabilities(cfg.max_cube_dim)
    centroids: list[Centroid] = []
    for cube_id in range(cube_count):
        dim = int(rng.choice(cfg.max_cube_dim, p=dim_probs)) + 1
        axes = FeatureSet.from_indices(
            sorted(int(a) for a in rng.choice(n, size=dim, replace=False)), n
        )
        try:
            cube, vertices = build_hypercube(n, axes, occupancy, rng, cfg.sigma, slot_pool)
        except CapacityError:
            return None
        codes = [code for code, _, _ in vertices]
        for _ in range(cfg.erosion_retries):
            survivors = erode(codes, dim, cfg.p_erode, rng)
            emitted = _cube_centroids(n, cube_id, axes, vertices, survivors, cfg.sigma)
            if emitted is not None:
                centroids.extend(emitted)
                break
        else:
            return None
    return centroids


def task_to_relation(task: Task) -> LabeledRelation:
    relation = LabeledRelation.from_pairs(
        ((c.coords, c.label) for c in task.centroids), task.n
    )
    if len(relation) != task.m:
        raise AssertionError("centroid coordinates must be pairwise distinct")
    return relation


def _validate(task: Task) -> str | None:
    relation = task_to_relation(task)
    selections = [c.selection for c in task.centroids]
    for j, centroid in enumerate(task.centroids):
        solution = solve_instance_selection(relation, j)
        if len(solution.minimal_sets) != 1:
            return f"centroid {j} has {len(solution.minimal_sets)} minimal selections"
        if solution.minimal_sets[0] != centroid.selection:
            return f"centroid {j} stored selection differs from the solver minimum"
        if not centroid.selection:
            return f"centroid {j} has an empty selection"
    _, rate = check_property1(relation, selections)
    if rate != 1.0:
        return f"ground truth fails the structural check at rate {rate}"
    if len({c.label for c in task.centroids}) < 2 and task.m > 1:
        return "single-label task"
    return None


def generate_task(
    n: int,
    config: GenConfig | None = None,
    seed: int = 0,
    task_id: str | None = None,
) -> Task:
    """Sample, erode and validate one task; deterministic in (n, config, seed)."""
    if not 2 <= n <= MAX_DIM:
        raise ValueError(f"dimension must lie in [2, {MAX_DIM}], got {n}")
    cfg = (config or GenConfig()).resolved(n)
    reason = "no attempt made"
    for attempt in range(cfg.task_retries):
        rng = np.random.default_rng(derive_seed(seed, "task", attempt))
        centroids = _build_once(n, cfg, rng)
        if centroids is None:
            reason = "cube placement or erosion retries exhausted"
            continue
        task = Task(
            id=task_id if task_id is not None else f"{n}d-{seed:016x}",
            n=n,
            sigma=cfg.sigma,
            noise_std=cfg.sigma * cfg.noise_ratio,
            seed=seed,
            generator_version=GENERATOR_VERSION,
            centroids=tuple(centroids),
        )
        problem = _validate(task)
        if problem is None:
            return task
        reason = problem
    raise GenerationError(
        f"gave up on task (n={n}, seed={seed}) after {cfg.task_retries} attempts: {reason}"
    )


def task_to_dict(task: Task) -> dict:
    return {
        "id": task.id,
        "n": task.n,
        "sigma": task.sigma,
        "noise_std": task.noise_std,
        "seed": str(task.seed),
        "generator_version": task.generator_version,
        "centroids": [
            {
                "coords": list(c.coords),
                "label": c.label,
                "selection": [i + 1 for i in c.selection.indices()],
                "hypercube": c.hypercube_id,
            }
            for c in task.centroids
        ],
    }


def save_task(task: Task, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(task_to_dict(task), handle, indent=1)
        handle.write("\n")


def _require(mapping: dict, key: str, kind, where: str):
    if key not in mapping:
        raise TaskFormatError(f"{where}: missing field '{key}'")
    value = mapping[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool):
        raise TaskFormatError(f"{where}: field '{key}' must be {kind.__name__}")
    return value


def task_from_dict(data: dict, where: str = "task") -> Task:
    if not isinstance(data, dict):
        raise TaskFormatError(f"{where}: top level must be an object")
    task_id = _require(data, "id", str, where)
    n = _require(data, "n", int, where)
    if not 1 <= n <= MAX_DIM:
        raise TaskFormatError(f"{where}: dimension {n} out of range")
    sigma = _require(data, "sigma", float, where)
    noise_std = float(data["noise_std"]) if "noise_std" in data else sigma / 2
    seed_text = _require(data, "seed", str, where)
    try:
        seed = int(seed_text)
    except ValueError as exc:
        raise TaskFormatError(f"{where}: seed '{seed_text}' is not an integer") from exc
    version = _require(data, "generator_version", str, where)
    if version != GENERATOR_VERSION:
        warnings.warn(
            f"{where}: generator version {version!r} differs from {GENERATOR_VERSION!r}",
            stacklevel=2,
        )
    raw_centroids = _require(data, "centroids", list, where)
    centroids = []
    for idx, raw in enumerate(raw_centroids):
        spot = f"{where}: centroid {idx}"
        if not isinstance(raw, dict):
            raise TaskFormatError(f"{spot} must be an object")
        coords = _require(raw, "coords", list, spot)
        if len(coords) != n or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in coords
        ):
            raise TaskFormatError(f"{spot}: coords must be {n} numbers")
        label = _require(raw, "label", int, spot)
        if label not in (0, 1):
            raise TaskFormatError(f"{spot}: label must be 0 or 1")
        selection = _require(raw, "selection", list, spot)
        if not all(isinstance(v, int) and 1 <= v <= n for v in selection):
            raise TaskFormatError(f"{spot}: selection entries must lie in [1, {n}]")
        if sorted(selection) != selection or len(set(selection)) != len(selection):
            raise TaskFormatError(f"{spot}: selection must be sorted and duplicate-free")
        centroids.append(
            Centroid(
                coords=tuple(float(v) for v in coords),
                label=label,
                selection=FeatureSet.from_indices((v - 1 for v in selection), n),
                hypercube_id=_require(raw, "hypercube", int, spot),
            )
        )
    return Task(
        id=task_id,
        n=n,
        sigma=sigma,
        noise_std=noise_std,
        seed=seed,
        generator_version=version,
        centroids=tuple(centroids),
    )


def load_task(path) -> Task:
    with open(path, "r", encoding="utf-8") as handle:
        try:
            data = json.load(handle)
        except json.JSONDecodeError as exc:
            raise TaskFormatError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    return task_from_dict(data, where=str(path))
