"""Power-set combinatorics over a finite ground set {1, ..., m}.

Subsets are bitmasks (bit i-1 set means element i is in the subset).
Elements are 1-based at the interface, 0-based as bit positions inside.
All nonempty subsets are globally ordered by (cardinality ascending,
lexicographic within a cardinality layer), which keeps the singleton
block first, the pair block second, and so on.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Iterator

from .errors import CapacityError, DomainError, ShapeError

#: Hard ceiling for enumeration-backed operations (2^12 = 4096 subsets).
MAX_ENUM_M = 12

#: Ceiling for kernel-only linear-algebra operations.
MAX_KERNEL_M = 64

_ENV_CAP = "DPPGEO_MAX_M"


def max_enumeration_m() -> int:
    """Current enumeration cap: 12, or lower if DPPGEO_MAX_M is set below it."""
    raw = os.environ.get(_ENV_CAP)
    if raw is None:
        return MAX_ENUM_M
    try:
        requested = int(raw)
    except ValueError:
        return MAX_ENUM_M
    return min(MAX_ENUM_M, requested)


def check_enumeration_capacity(m: int, cap: int | None = None) -> None:
    """Raise CapacityError unless 1 <= m <= min(cap, enumeration cap)."""
    limit = max_enumeration_m()
    if cap is not None:
        limit = min(limit, cap)
    if m < 1:
        raise DomainError(f"ground-set size must be >= 1, got {m}")
    if m > limit:
        raise CapacityError(
            f"m={m} exceeds the enumeration cap {limit} for this operation"
        )


@dataclass(frozen=True)
class SubsetId:
    """A subset of {1, ..., m} as a bitmask tied to its ground-set size."""

    bits: int
    m: int

    def __post_init__(self):
        if not 1 <= self.m <= MAX_KERNEL_M:
            raise DomainError(f"ground-set size must be in [1, {MAX_KERNEL_M}], got {self.m}")
        if self.bits < 0 or self.bits >> self.m:
            raise DomainError(
                f"bitmask {self.bits:#x} has bits above position m={self.m}"
            )

    @classmethod
    def from_elements(cls, elements, m: int) -> "SubsetId":
        """Build from an iterable of 1-based elements."""
        bits = 0
        for e in elements:
            if not 1 <= e <= m:
                raise DomainError(f"element {e} outside ground set 1..{m}")
            bits |= 1 << (e - 1)
        return cls(bits, m)

    @property
    def cardinality(self) -> int:
        return self.bits.bit_count()

    def elements(self) -> tuple[int, ...]:
        """Sorted 1-based elements."""
        return tuple(i + 1 for i in range(self.m) if self.bits >> i & 1)

    def indices(self) -> tuple[int, ...]:
        """Sorted 0-based positions, ready for numpy fancy indexing."""
        return tuple(i for i in range(self.m) if self.bits >> i & 1)

    def issubset(self, other: "SubsetId") -> bool:
        _check_same_ground_set(self, other)
        return self.bits & other.bits == self.bits

    def union(self, other: "SubsetId") -> "SubsetId":
        _check_same_ground_set(self, other)
        return SubsetId(self.bits | other.bits, self.m)

    def to_json(self) -> list[int]:
        """Sorted 1-based element array (the wire format; [] for the empty set)."""
        return list(self.elements())

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"SubsetId({{{','.join(map(str, self.elements()))}}}, m={self.m})"


def _check_same_ground_set(a: SubsetId, b: SubsetId) -> None:
    if a.m != b.m:
        raise ShapeError(f"mismatched ground-set sizes {a.m} != {b.m}")


def mask_of(elements, m: int) -> int:
    """Bitmask of 1-based elements (no SubsetId wrapper)."""
    return SubsetId.from_elements(elements, m).bits


def enumerate_sk(m: int, k: int) -> list[SubsetId]:
    """All k-subsets of {1..m} in lexicographic order of their sorted element lists."""
    if not 1 <= m <= MAX_ENUM_M:
        raise DomainError(f"m must be in [1, {MAX_ENUM_M}], got {m}")
    if not 1 <= k <= m:
        raise DomainError(f"k must be in [1, m={m}], got {k}")
    return [SubsetId.from_elements(c, m) for c in combinations(range(1, m + 1), k)]


def sufficient_stat(i: SubsetId, a: SubsetId) -> int:
    """Indicator that every element of ``i`` lies in ``a`` (1 iff i ⊆ a)."""
    _check_same_ground_set(i, a)
    if i.bits == 0:
        raise DomainError("the indexing subset must be nonempty")
    return 1 if i.bits & a.bits == i.bits else 0


def proper_subsets_of_size(i: SubsetId, l: int) -> list[SubsetId]:
    """All l-subsets of ``i`` with l < |i|, lexicographic order."""
    if l >= i.cardinality:
        raise DomainError(f"l={l} must be smaller than |I|={i.cardinality}")
    if l < 0:
        raise DomainError(f"l must be nonnegative, got {l}")
    return [SubsetId.from_elements(c, i.m) for c in combinations(i.elements(), l)]


def enumerate_powerset(m: int) -> Iterator[SubsetId]:
    """Yield all 2^m subsets (including the empty set) in ascending bitmask order."""
    check_enumeration_capacity(m)
    for bits in range(1 << m):
        yield SubsetId(bits, m)


@dataclass(frozen=True)
class SubsetIndex:
    """Bidirectional map between nonempty subsets and their global positions.

    Global position g runs over 0 .. 2^m-2 in (cardinality, lex) order:
    positions 0..m-1 are the singletons, the next m(m-1)/2 the pairs, etc.
    """

    m: int
    masks: tuple[int, ...]
    _position_of_mask: tuple[int, ...]
    _layer_start: tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.masks)

    def position(self, subset: SubsetId | int) -> int:
        """Global position of a nonempty subset (mask or SubsetId)."""
        bits = subset.bits if isinstance(subset, SubsetId) else subset
        if bits <= 0 or bits >= 1 << self.m:
            raise DomainError(f"mask {bits} is empty or outside the ground set")
        return self._position_of_mask[bits]

    def forward(self, subset: SubsetId | int) -> tuple[int, int, int]:
        """(cardinality k, position within the k-layer, global position)."""
        g = self.position(subset)
        bits = self.masks[g]
        k = bits.bit_count()
        return k, g - self._layer_start[k], g

    def backward(self, k: int, layer_pos: int) -> SubsetId:
        """Inverse of forward's first two components."""
        sl = self.layer_slice(k)
        g = sl.start + layer_pos
        if layer_pos < 0 or g >= sl.stop:
            raise DomainError(f"position {layer_pos} outside layer {k}")
        return SubsetId(self.masks[g], self.m)

    def subset_at(self, g: int) -> SubsetId:
        return SubsetId(self.masks[g], self.m)

    def layer_slice(self, k: int) -> slice:
        """Slice of global positions occupied by cardinality-k subsets."""
        if not 1 <= k <= self.m:
            raise DomainError(f"cardinality {k} outside 1..{self.m}")
        stop = self._layer_start[k + 1] if k < self.m else self.size
        return slice(self._layer_start[k], stop)


def subset_index(m: int) -> SubsetIndex:
    """The (cardinality, lex)-ordered index of all nonempty subsets of {1..m}."""
    check_enumeration_capacity(m)
    return _build_subset_index(m)


@lru_cache(maxsize=None)
def _build_subset_index(m: int) -> SubsetIndex:
    masks: list[int] = []
    layer_start = [0] * (m + 1)
    for k in range(1, m + 1):
        layer_start[k] = len(masks)
        masks.extend(s.bits for s in enumerate_sk(m, k))
    position_of_mask = [-1] * (1 << m)
    for g, bits in enumerate(masks):
        position_of_mask[bits] = g
    return SubsetIndex(m, tuple(masks), tuple(position_of_mask), tuple(layer_start))


def pair_order(m: int) -> list[tuple[int, int]]:
    """0-based (a, b) pairs with a < b in the lex order used for all pair-indexed vectors."""
    return list(combinations(range(m), 2))
