"""Finite labeled relations and exact functional-dependence machinery.

A relation is a finite list of (point, label) pairs. A point belongs to the
functionality domain of an index subset I when every stored point sharing
its projection onto I carries the same label. Minimal selections are found
by reducing to hitting sets over "conflict masks": the coordinates on which
a point differs from each opposite-label point. A subset certifies a point
exactly when it intersects every one of its conflict masks.

Grouping uses exact floating-point equality; generated tasks emit exact
grid coordinates, user data must be quantised before use.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .subsets import FeatureSet, masks_of_size, popcount, submasks

Point = tuple[float, ...]
Label = int


class NotFunctionalError(ValueError):
    """The same coordinates carry contradicting labels."""


@dataclass(frozen=True)
class LabeledRelation:
    """A finite left-total relation between points and labels.

    Duplicate (point, label) pairs are collapsed on construction. The same
    coordinates may still appear under several labels; that configuration is
    exactly non-functionality and the solvers refuse it.
    """

    points: tuple[Point, ...]
    labels: tuple[Label, ...]
    n: int

    def __post_init__(self) -> None:
        if not self.points:
            raise ValueError("relation needs at least one (point, label) pair")
        if len(self.points) != len(self.labels):
            raise ValueError("points and labels must have equal length")

    @classmethod
    def from_pairs(
        cls, pairs: Iterable[tuple[Sequence[float], Label]], n: int | None = None
    ) -> "LabeledRelation":
        seen: set[tuple[Point, Label]] = set()
        points: list[Point] = []
        labels: list[Label] = []
        for raw, label in pairs:
            point = tuple(float(v) for v in raw)
            if n is None:
                n = len(point)
            if len(point) != n:
                raise ValueError(f"point {point} has {len(point)} coords, expected {n}")
            key = (point, label)
            if key in seen:
                continue
            seen.add(key)
            points.append(point)
            labels.append(label)
        if n is None or not points:
            raise ValueError("relation needs at least one (point, label) pair")
        return cls(tuple(points), tuple(labels), n)

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class SelectionSolution:
    """All minimal-cardinality index subsets certifying a query."""

    minimal_sets: tuple[FeatureSet, ...]
    cardinality: int

    def __post_init__(self) -> None:
        if not self.minimal_sets:
            raise ValueError("a selection solution cannot be empty")
        if any(len(s) != self.cardinality for s in self.minimal_sets):
            raise ValueError("all minimal sets must share the stated cardinality")


def project(x: Sequence[float], subset: FeatureSet) -> Point:
    """Canonical projection: keep coordinates in the subset, zero the rest."""
    if len(x) != subset.n:
        raise ValueError(f"point has {len(x)} coords, subset lives in {subset.n}")
    return tuple(float(x[i]) if i in subset else 0.0 for i in range(subset.n))


def functional_domain(relation: LabeledRelation, subset: FeatureSet) -> frozenset[int]:
    """Indices of points whose projection group onto `subset` is label-pure."""
    if subset.n != relation.n:
        raise ValueError(f"subset dimension {subset.n} != relation dimension {relation.n}")
    groups: dict[Point, list[int]] = {}
    for j, point in enumerate(relation.points):
        groups.setdefault(project(point, subset), []).append(j)
    good: list[int] = []
    for members in groups.values():
        first = relation.labels[members[0]]
        if all(relation.labels[k] == first for k in members):
            good.extend(members)
    return frozenset(good)


def _conflict_masks(relation: LabeledRelation, j: int) -> set[int]:
    """Coordinate-difference masks between point j and each opposite-label point.

    An index subset certifies j iff it intersects every returned mask. An
    empty mask means contradicting labels at identical coordinates.
    """
    xj = relation.points[j]
    yj = relation.labels[j]
    n = relation.n
    masks: set[int] = set()
    for k, (xk, yk) in enumerate(zip(relation.points, relation.labels)):
        if yk == yj:
            continue
        mask = 0
        for i in range(n):
            if xk[i] != xj[i]:
                mask |= 1 << i
        if mask == 0:
            raise NotFunctionalError(
                f"point {j} at {xj} carries labels {yj} and {yk}"
            )
        masks.add(mask)
    return masks


def _inclusion_minimal(masks: Iterable[int]) -> list[int]:
    out: list[int] = []
    for mask in sorted(masks, key=popcount):
        if not any(kept & ~mask == 0 for kept in out):
            out.append(mask)
    return out


def _expand(compact: int, coords: Sequence[int]) -> int:
    full = 0
    bit = 0
    while compact >> bit:
        if compact >> bit & 1:
            full |= 1 << coords[bit]
        bit += 1
    return full


def _minimal_hitting_sets(masks: set[int], n: int) -> list[int]:
    """All minimal-cardinality masks intersecting every input mask, ascending.

    Restricting the search universe to the union of inclusion-minimal masks
    is lossless: an index outside every minimal mask can be dropped from any
    hitting set without uncovering anything.
    """
    if not masks:
        return [0]
    minimal = _inclusion_minimal(masks)
    universe = 0
    for mask in minimal:
        universe |= mask
    coords = [i for i in range(n) if universe >> i & 1]
    for size in range(1, len(coords) + 1):
        hits: list[int] = []
        for compact in masks_of_size(len(coords), size):
            full = _expand(compact, coords)
            if all(full & mask for mask in minimal):
                hits.append(full)
        if hits:
            return hits
    raise AssertionError("the mask union always hits every mask")


def solve_instance_selection(relation: LabeledRelation, j: int) -> SelectionSolution:
    """All minimal-cardinality subsets whose functionality domain contains j.

    Breadth-first over cardinalities, ascending bitmask order within one;
    the parent-subset hierarchy guarantees the first hit level is complete.
    """
    if not 0 <= j < len(relation):
        raise IndexError(f"point index {j} out of range")
    masks = _conflict_masks(relation, j)
    hits = _minimal_hitting_sets(masks, relation.n)
    sets = tuple(FeatureSet(mask, relation.n) for mask in hits)
    return SelectionSolution(sets, popcount(hits[0]))


def solve_global_selection(relation: LabeledRelation) -> SelectionSolution:
    """All minimal-cardinality subsets certifying every point at once."""
    n = relation.n
    masks: set[int] = set()
    for j in range(len(relation)):
        xj = relation.points[j]
        yj = relation.labels[j]
        for k in range(j + 1, len(relation)):
            if relation.labels[k] == yj:
                continue
            xk = relation.points[k]
            mask = 0
            for i in range(n):
                if xk[i] != xj[i]:
                    mask |= 1 << i
            if mask == 0:
                raise NotFunctionalError(
                    f"points {j} and {k} at {xj} carry labels {yj} and {relation.labels[k]}"
                )
            masks.add(mask)
    hits = _minimal_hitting_sets(masks, n)
    sets = tuple(FeatureSet(mask, n) for mask in hits)
    return SelectionSolution(sets, popcount(hits[0]))


def _predicted_list(
    predicted: Sequence[FeatureSet] | Mapping[int, FeatureSet], count: int
) -> list[FeatureSet]:
    if isinstance(predicted, Mapping):
        out = [predicted.get(j) for j in range(count)]
    else:
        out = list(predicted)
    if len(out) != count or any(s is None for s in out):
        raise ValueError("predicted selections must cover every point")
    return out  # type: ignore[return-value]


def check_property1(
    relation: LabeledRelation,
    predicted: Sequence[FeatureSet] | Mapping[int, FeatureSet],
) -> tuple[tuple[bool, ...], float]:
    """Complementary-dependence check of predicted selections.

    Point j verifies the property when every point sharing its projection
    onto its own predicted subset predicts a subset of that subset. Needs
    no ground truth. Returns per-point flags and their mean.
    """
    sel = _predicted_list(predicted, len(relation))
    coords = np.asarray(relation.points, dtype=float)
    masks = np.fromiter((s.bits for s in sel), dtype=np.int64, count=len(sel))
    flags = np.ones(len(sel), dtype=bool)
    for mask in set(masks.tolist()):
        idx = [i for i in range(relation.n) if mask >> i & 1]
        keys = coords[:, idx]
        _, inverse = np.unique(keys, axis=0, return_inverse=True)
        escaping = (masks & ~mask) != 0
        group_bad = np.bincount(inverse, weights=escaping.astype(float)) > 0
        members = masks == mask
        flags[members] = ~group_bad[inverse[members]]
    return tuple(bool(f) for f in flags), float(flags.mean())


def _domain_bits(
    relation: LabeledRelation,
    subset: FeatureSet,
    domain_fn: Callable[[LabeledRelation, FeatureSet], frozenset[int]],
) -> int:
    bits = 0
    for j in domain_fn(relation, subset):
        bits |= 1 << j
    return bits


def check_property2(
    relation: LabeledRelation,
    domain_fn: Callable[[LabeledRelation, FeatureSet], frozenset[int]] = functional_domain,
) -> bool:
    """Exhaustive dependence-hierarchy check: I ⊆ J implies domain(I) ⊆ domain(J).

    `domain_fn` is injectable so a deliberately corrupted domain can be shown
    to fail (mutation testing of the checker itself).
    """
    n = relation.n
    if n > 12:
        raise ValueError("exhaustive hierarchy check limited to n <= 12")
    domains = [
        _domain_bits(relation, FeatureSet(mask, n), domain_fn) for mask in range(1 << n)
    ]
    for parent in range(1 << n):
        big = domains[parent]
        for sub in submasks(parent):
            if domains[sub] & ~big:
                return False
    return True


def proxy_sets(
    relation: LabeledRelation, subset: FeatureSet
) -> tuple[frozenset[int], frozenset[int]]:
    """Alternate-value and baseline-deviation proxy sets (B, C) for a subset.

    Both group points on the complement: B collects points whose group shows
    more than one label (fixing the other features, the subset's features
    can still flip the output); C collects points whose label deviates from
    their group mean by more than 1e-9. C ⊆ B always: deviating from a group
    mean requires an alternate value in the group. B is the complement of
    the functionality domain of the complement subset.
    """
    if subset.n != relation.n:
        raise ValueError(f"subset dimension {subset.n} != relation dimension {relation.n}")
    seen: dict[Point, Label] = {}
    for point, label in zip(relation.points, relation.labels):
        if seen.setdefault(point, label) != label:
            raise NotFunctionalError(f"point {point} carries two labels")
    complement = subset.complement()
    groups: dict[Point, list[int]] = {}
    for j, point in enumerate(relation.points):
        groups.setdefault(project(point, complement), []).append(j)
    b_set: set[int] = set()
    c_set: set[int] = set()
    for members in groups.values():
        values = [float(relation.labels[k]) for k in members]
        if len(set(values)) > 1:
            b_set.update(members)
        mean = sum(values) / len(values)
        c_set.update(k for k, v in zip(members, values) if abs(v - mean) > 1e-9)
    return frozenset(b_set), frozenset(c_set)
