"""Multi-index sets used to label moments and matrix rows/columns.

A multi-index is a plain tuple of ints. Enumeration orders are fixed here
once and every matrix in the package inherits them:

* ``TOTAL_DEGREE``: graded lexicographic (by total degree, then ascending
  lexicographic order of the tuple).
* ``BOX`` and ``SYMMETRIC_BOX``: row-major, last coordinate fastest.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from functools import cached_property
from math import comb

import numpy as np

MultiIndex = tuple[int, ...]


class Shape(enum.Enum):
    TOTAL_DEGREE = "total_degree"
    BOX = "box"
    SYMMETRIC_BOX = "symmetric_box"


def total_degree(k: MultiIndex) -> int:
    return sum(k)


def max_degree(k: MultiIndex) -> int:
    return max((abs(v) for v in k), default=0)


@dataclass(frozen=True)
class IndexSet:
    dimension: int
    order: int
    shape: Shape
    _pos: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if self.order < 0:
            raise ValueError("order must be >= 0")
        object.__setattr__(self, "_pos", {})

    @cached_property
    def array(self) -> np.ndarray:
        """Enumeration as an integer array of shape (len, dimension)."""
        d, n = self.dimension, self.order
        if self.shape is Shape.BOX:
            axes = [np.arange(n + 1)] * d
        elif self.shape is Shape.SYMMETRIC_BOX:
            axes = [np.arange(-n, n + 1)] * d
        else:
            rows = [k for k in itertools.product(range(n + 1), repeat=d) if sum(k) <= n]
            rows.sort(key=lambda k: (sum(k), k))
            return np.array(rows, dtype=np.int64).reshape(-1, d)
        grids = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1).astype(np.int64)

    @property
    def indices(self) -> list[MultiIndex]:
        return [tuple(int(v) for v in row) for row in self.array]

    def __len__(self) -> int:
        return expected_size(self.dimension, self.order, self.shape)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, k) -> bool:
        k = tuple(k)
        if len(k) != self.dimension:
            return False
        if self.shape is Shape.TOTAL_DEGREE:
            return all(v >= 0 for v in k) and sum(k) <= self.order
        lo = -self.order if self.shape is Shape.SYMMETRIC_BOX else 0
        return all(lo <= v <= self.order for v in k)

    def position(self, k: MultiIndex) -> int:
        """Row of ``k`` in the enumeration."""
        if not self._pos:
            self._pos.update({idx: i for i, idx in enumerate(self.indices)})
        try:
            return self._pos[tuple(k)]
        except KeyError:
            raise KeyError(f"{tuple(k)} not in {self.shape.value} set of order {self.order}") from None


def expected_size(d: int, n: int, shape: Shape) -> int:
    if shape is Shape.TOTAL_DEGREE:
        return comb(n + d, d)
    if shape is Shape.BOX:
        return (n + 1) ** d
    return (2 * n + 1) ** d


def box(d: int, n: int) -> IndexSet:
    return IndexSet(d, n, Shape.BOX)


def symmetric_box(d: int, n: int) -> IndexSet:
    return IndexSet(d, n, Shape.SYMMETRIC_BOX)


def total_degree_set(d: int, n: int) -> IndexSet:
    return IndexSet(d, n, Shape.TOTAL_DEGREE)
