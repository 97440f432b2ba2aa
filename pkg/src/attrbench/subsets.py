"""Bitmask-encoded index subsets and lattice enumeration helpers.

Feature subsets are encoded as unsigned bitmasks over the ambient dimension
``n`` (bit ``i`` set means coordinate ``i`` is selected).  All lattice walks
are deterministic: within a cardinality level, masks are visited in ascending
numeric order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

MAX_DIM = 32


def popcount(mask: int) -> int:
    return mask.bit_count()


@dataclass(frozen=True, order=True)
class FeatureSet:
    """An index subset of ``{0, ..., n-1}`` stored as a bitmask.

    Immutable and hashable; set algebra goes through ``|``, ``&``, ``-``
    and ``complement``.  Indices are 0-based throughout the library; the
    task file format converts to 1-based on disk.
    """

    bits: int
    n: int

    def __post_init__(self) -> None:
        if not (1 <= self.n <= MAX_DIM):
            raise ValueError(f"dimension must be in [1, {MAX_DIM}], got {self.n}")
        if self.bits < 0 or self.bits >> self.n:
            raise ValueError(f"mask {self.bits:#x} has bits outside [0, {self.n})")

    @classmethod
    def empty(cls, n: int) -> "FeatureSet":
        return cls(0, n)

    @classmethod
    def full(cls, n: int) -> "FeatureSet":
        return cls((1 << n) - 1, n)

    @classmethod
    def from_indices(cls, indices: Iterable[int], n: int) -> "FeatureSet":
        bits = 0
        for i in indices:
            if not 0 <= i < n:
                raise ValueError(f"index {i} out of range for dimension {n}")
            bits |= 1 << i
        return cls(bits, n)

    @classmethod
    def singleton(cls, i: int, n: int) -> "FeatureSet":
        return cls.from_indices((i,), n)

    def indices(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.n) if self.bits >> i & 1)

    def __len__(self) -> int:
        return popcount(self.bits)

    def __contains__(self, i: int) -> bool:
        return 0 <= i < self.n and bool(self.bits >> i & 1)

    def __iter__(self) -> Iterator[int]:
        return iter(self.indices())

    def __bool__(self) -> bool:
        return self.bits != 0

    def __or__(self, other: "FeatureSet") -> "FeatureSet":
        self._check_same_space(other)
        return FeatureSet(self.bits | other.bits, self.n)

    def __and__(self, other: "FeatureSet") -> "FeatureSet":
        self._check_same_space(other)
        return FeatureSet(self.bits & other.bits, self.n)

    def __sub__(self, other: "FeatureSet") -> "FeatureSet":
        self._check_same_space(other)
        return FeatureSet(self.bits & ~other.bits, self.n)

    def add(self, i: int) -> "FeatureSet":
        if not 0 <= i < self.n:
            raise ValueError(f"index {i} out of range for dimension {self.n}")
        return FeatureSet(self.bits | (1 << i), self.n)

    def complement(self) -> "FeatureSet":
        return FeatureSet(~self.bits & ((1 << self.n) - 1), self.n)

    def issubset(self, other: "FeatureSet") -> bool:
        self._check_same_space(other)
        return self.bits & ~other.bits == 0

    def _check_same_space(self, other: "FeatureSet") -> None:
        if self.n != other.n:
            raise ValueError(f"dimension mismatch: {self.n} vs {other.n}")

    def __repr__(self) -> str:
        return f"FeatureSet({{{','.join(map(str, self.indices()))}}}, n={self.n})"


def masks_of_size(n: int, k: int) -> Iterator[int]:
    """All ``k``-element masks over ``n`` bits, in ascending numeric order.

    Gosper's hack; O(1) per mask, no full-lattice sweep, so it stays usable
    for large ``n`` with small ``k``.
    """
    if k == 0:
        yield 0
        return
    if k > n:
        return
    mask = (1 << k) - 1
    limit = 1 << n
    while mask < limit:
        yield mask
        low = mask & -mask
        ripple = mask + low
        mask = (((ripple ^ mask) >> 2) // low) | ripple


def all_masks(n: int) -> Iterator[int]:
    """All ``2**n`` masks in ascending order (implies ascending cardinality
    is NOT preserved; use :func:`masks_of_size` for level-by-level walks)."""
    return iter(range(1 << n))


def submasks(mask: int) -> Iterator[int]:
    """All submasks of ``mask`` including itself and 0, descending order."""
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def subsets_of_size(n: int, k: int) -> Iterator[FeatureSet]:
    for mask in masks_of_size(n, k):
        yield FeatureSet(mask, n)


def all_subsets(n: int) -> Iterator[FeatureSet]:
    for mask in all_masks(n):
        yield FeatureSet(mask, n)
