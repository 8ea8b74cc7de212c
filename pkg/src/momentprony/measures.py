"""Dirac ensembles, moment tables, separation distances and order bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import IncompleteMomentsError, SeparationError
from .harmonics import check_unit, cumulative_dimension, flat_index, harmonic_indices, real_harmonics
from .indexing import symmetric_box

SPHERE_DUPLICATE_TOL = 1e-12
TORUS = "torus"
SPHERE = "sphere"


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TorusEnsemble:
    """Complex Dirac ensemble on [0, 1)^d."""

    points: np.ndarray
    coefficients: np.ndarray

    def __post_init__(self):
        t = np.atleast_2d(np.asarray(self.points, dtype=float))
        c = np.atleast_1d(np.asarray(self.coefficients, dtype=complex))
        if t.shape[0] != c.shape[0]:
            raise ValueError("points and coefficients differ in length")
        if t.shape[0] < 1:
            raise ValueError("an ensemble needs at least one point")
        if np.any(t < 0) or np.any(t >= 1):
            raise ValueError("torus coordinates must lie in [0, 1)")
        if np.any(c == 0):
            raise ValueError("coefficients must be nonzero")
        if len({tuple(row) for row in t.tolist()}) != t.shape[0]:
            raise ValueError("points must be pairwise distinct")
        object.__setattr__(self, "points", _readonly(t))
        object.__setattr__(self, "coefficients", _readonly(c))

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    @property
    def sparsity(self) -> int:
        return self.points.shape[0]

    def __eq__(self, other):
        return (
            isinstance(other, TorusEnsemble)
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.coefficients, other.coefficients)
        )


@dataclass(frozen=True, eq=False)
class SphereEnsemble:
    """Signed real Dirac ensemble on the unit sphere S^2."""

    points: np.ndarray
    coefficients: np.ndarray

    def __post_init__(self):
        x = check_unit(np.atleast_2d(np.asarray(self.points, dtype=float)))
        c = np.atleast_1d(np.asarray(self.coefficients))
        if np.iscomplexobj(c):
            if np.any(c.imag != 0):
                raise ValueError("sphere coefficients must be real")
            c = c.real
        c = c.astype(float)
        if x.shape[0] != c.shape[0]:
            raise ValueError("points and coefficients differ in length")
        if x.shape[0] < 1:
            raise ValueError("an ensemble needs at least one point")
        if np.any(c == 0):
            raise ValueError("coefficients must be nonzero")
        if x.shape[0] > 1:
            dist = np.linalg.norm(x[:, None, :] - x[None, :, :], axis=-1)
            np.fill_diagonal(dist, np.inf)
            if dist.min() <= SPHERE_DUPLICATE_TOL:
                raise ValueError("points must be pairwise distinct")
        object.__setattr__(self, "points", _readonly(x))
        object.__setattr__(self, "coefficients", _readonly(c))

    dimension = 3

    @property
    def sparsity(self) -> int:
        return self.points.shape[0]

    def __eq__(self, other):
        return (
            isinstance(other, SphereEnsemble)
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.coefficients, other.coefficients)
        )


@dataclass(frozen=True, eq=False)
class MomentTable:
    """Complete table of moments over a declared index range.

    Torus tables hold a dense complex array of shape ``(2n+1,)*d`` where the
    moment ``f(k)`` sits at ``values[k + n]``. Sphere tables hold a flat real
    array over ``(k, l)``, ``k <= n``, in harmonic flat order.
    """

    domain: str
    dimension: int
    order: int
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if self.domain == TORUS:
            shape = (2 * self.order + 1,) * self.dimension
            v = v.astype(complex)
        elif self.domain == SPHERE:
            if self.dimension != 3:
                raise ValueError("sphere tables are defined for S^2 only (dimension 3)")
            shape = (cumulative_dimension(self.order),)
            if np.iscomplexobj(v):
                if np.any(v.imag != 0):
                    raise ValueError("sphere moments must be real")
                v = v.real
            v = v.astype(float)
        else:
            raise ValueError(f"unknown domain {self.domain!r}")
        if v.shape != shape:
            raise ValueError(f"moment array has shape {v.shape}, expected {shape}")
        object.__setattr__(self, "values", _readonly(v))

    @classmethod
    def from_entries(cls, domain: str, dimension: int, order: int, entries: Mapping) -> "MomentTable":
        """Build from an index -> value mapping, rejecting incomplete input."""
        if domain == TORUS:
            values = np.empty((2 * order + 1,) * dimension, dtype=complex)
            for k in symmetric_box(dimension, order):
                if k not in entries:
                    raise IncompleteMomentsError(k)
                values[tuple(np.add(k, order))] = entries[k]
        elif domain == SPHERE:
            values = np.empty(cumulative_dimension(order))
            for k, l in harmonic_indices(order):
                if (k, l) not in entries:
                    raise IncompleteMomentsError((k, l))
                values[flat_index(k, l)] = entries[(k, l)]
        else:
            raise ValueError(f"unknown domain {domain!r}")
        return cls(domain, dimension, order, values)

    def entries(self) -> dict:
        if self.domain == TORUS:
            return {k: complex(self[k]) for k in symmetric_box(self.dimension, self.order)}
        return {kl: float(self[kl]) for kl in harmonic_indices(self.order)}

    def __getitem__(self, index):
        if self.domain == TORUS:
            k = tuple(index)
            if len(k) != self.dimension or max(abs(v) for v in k) > self.order:
                raise IncompleteMomentsError(k)
            return self.values[tuple(v + self.order for v in k)]
        k, l = index
        if k > self.order:
            raise IncompleteMomentsError((k, l))
        return self.values[flat_index(k, l)]

    def truncate(self, order: int) -> "MomentTable":
        if order > self.order:
            missing = (order,) * self.dimension if self.domain == TORUS else (order, 1)
            raise IncompleteMomentsError(missing)
        if self.domain == TORUS:
            lo = self.order - order
            sl = (slice(lo, lo + 2 * order + 1),) * self.dimension
            return MomentTable(TORUS, self.dimension, order, self.values[sl])
        return MomentTable(SPHERE, 3, order, self.values[: cumulative_dimension(order)])

    def __eq__(self, other):
        return (
            isinstance(other, MomentTable)
            and (self.domain, self.dimension, self.order) == (other.domain, other.dimension, other.order)
            and np.array_equal(self.values, other.values)
        )


def torus_moments(ensemble: TorusEnsemble, n: int) -> MomentTable:
    """Moments ``f(k) = sum_j c_j exp(2 pi i k.t_j)`` for ``k`` in ``{-n..n}^d``."""
    if n < 0:
        raise ValueError("order must be >= 0")
    d = ensemble.dimension
    ks = np.arange(-n, n + 1)
    # per-axis factors, combined as an outer product over axes
    factors = np.exp(2j * np.pi * ensemble.points[:, :, None] * ks[None, None, :])
    out = ensemble.coefficients.reshape((-1,) + (1,) * d).astype(complex)
    for axis in range(d):
        shape = [-1] + [1] * d
        shape[axis + 1] = 2 * n + 1
        out = out * factors[:, axis, :].reshape(shape)
    return MomentTable(TORUS, d, n, out.sum(axis=0))


def sphere_moments(ensemble: SphereEnsemble, n: int) -> MomentTable:
    """Moments ``f(k, l) = sum_j c_j Y_k^l(x_j)`` for all ``k <= n``."""
    if n < 0:
        raise ValueError("order must be >= 0")
    Y = real_harmonics(ensemble.points, n)
    return MomentTable(SPHERE, 3, n, ensemble.coefficients @ Y)


def torus_separation(points) -> float:
    """Wrap-around l-infinity separation ``min_{j != l, r} |t_j - t_l + r|_inf``."""
    t = np.atleast_2d(np.asarray(points, dtype=float))
    if t.shape[0] < 2:
        raise SeparationError("separation undefined for fewer than two points")
    diff = np.abs(t[:, None, :] - t[None, :, :]) % 1.0
    diff = np.minimum(diff, 1.0 - diff)
    dist = diff.max(axis=-1)
    np.fill_diagonal(dist, np.inf)
    sep = float(dist.min())
    if sep == 0.0:
        raise SeparationError("duplicate points have zero separation")
    return sep


def sphere_separation(points) -> float:
    """Geodesic separation ``min_{j != l} arccos(x_j . x_l)``."""
    x = check_unit(np.atleast_2d(np.asarray(points, dtype=float)))
    if x.shape[0] < 2:
        raise SeparationError("separation undefined for fewer than two points")
    # arctan2 form keeps accuracy for nearly parallel / antipodal pairs
    cross = np.linalg.norm(np.cross(x[:, None, :], x[None, :, :]), axis=-1)
    dot = x @ x.T
    ang = np.arctan2(cross, dot)
    np.fill_diagonal(ang, np.inf)
    sep = float(ang.min())
    if sep <= SPHERE_DUPLICATE_TOL:
        raise SeparationError("duplicate points have zero separation")
    return sep


@dataclass(frozen=True)
class OrderBounds:
    identification: int
    full_rank: int


def _least_integer_above(x: float) -> int:
    # guard against x landing a hair below an integer it equals exactly
    return int(math.floor(x + 1e-12 * max(1.0, abs(x)))) + 1


def required_order(q: float, domain: str, d: int = 3) -> OrderBounds:
    """Least orders strictly above the identification and full-rank bounds.

    Torus: ``n > d**1.5 / q + d + 1`` (identification) and ``n > sqrt(d) / q``
    (Vandermonde full rank). Sphere (d = 3): ``n > 2.5 pi d / q + 1`` and
    ``n > 2.5 pi d / q``.
    """
    if not q > 0:
        raise ValueError("separation must be positive")
    if domain == TORUS:
        return OrderBounds(
            _least_integer_above(d**1.5 / q + d + 1),
            _least_integer_above(math.sqrt(d) / q),
        )
    if domain == SPHERE:
        base = 2.5 * math.pi * 3 / q
        return OrderBounds(_least_integer_above(base + 1), _least_integer_above(base))
    raise ValueError(f"unknown domain {domain!r}")

