"""Spherical moment matrix ``H_n = Y_n^T D Y_n`` assembled from moments alone."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IncompleteMomentsError
from .gaunt import GauntTable, cached_gaunt
from .harmonics import cumulative_dimension, real_harmonics
from .kernels import DEFAULT_RANK_TOL, KernelBasis, numerical_kernel
from .measures import SPHERE, MomentTable, SphereEnsemble
from .torus import CoefficientFit, _qr_lstsq


@dataclass(frozen=True, eq=False)
class SphericalMomentMatrix:
    order: int
    values: np.ndarray

    @property
    def size(self) -> int:
        return self.values.shape[0]

    def kernel(self, rank_tol: float = DEFAULT_RANK_TOL) -> KernelBasis:
        return numerical_kernel(self.values, rank_tol, domain=SPHERE, dimension=3, order=self.order)


def assemble_spherical_moment_matrix(
    moments: MomentTable,
    n: int,
    gaunt: GauntTable | None = None,
) -> SphericalMomentMatrix:
    """Entry ``((k,l),(r,s)) = sum_{t,u} c(k,l;r,s;t,u) f(t,u)``.

    Needs moments through degree ``2n``. ``gaunt`` defaults to the cached
    table of order ``n``; a table of larger order is truncated.
    """
    if moments.domain != SPHERE:
        raise ValueError("spherical assembly needs sphere moments")
    if n < 0:
        raise ValueError("order must be >= 0")
    if moments.order < 2 * n:
        raise IncompleteMomentsError(
            (moments.order + 1, 1),
            f"moments through degree {2 * n} are required for order {n}; table stops at degree {moments.order}",
        )
    if gaunt is None:
        gaunt = cached_gaunt(n)
    elif gaunt.order < n:
        raise ValueError(f"gaunt table of order {gaunt.order} cannot serve order {n}")
    elif gaunt.order > n:
        gaunt = gaunt.truncate(n)
    N = cumulative_dimension(n)
    f = moments.values
    upper = np.bincount(
        gaunt.a.astype(np.int64) * N + gaunt.b,
        weights=gaunt.value * f[gaunt.c],
        minlength=N * N,
    ).reshape(N, N)
    H = upper + upper.T
    H[np.diag_indices(N)] = np.diag(upper)
    H.setflags(write=False)
    return SphericalMomentMatrix(n, H)


def factorized_moment_matrix(ensemble: SphereEnsemble, n: int) -> np.ndarray:
    """Debug assembler ``Y_n^T D Y_n`` from ground truth."""
    Y = real_harmonics(ensemble.points, n)
    return Y.T @ (ensemble.coefficients[:, None] * Y)


def recover_sphere_coefficients(points, moments: MomentTable, rank_tol: float = 1e-10) -> CoefficientFit:
    """Least squares ``sum_j c_j Y_t^u(x_j) = f(t, u)`` over the whole table."""
    Y = real_harmonics(np.atleast_2d(points), moments.order)
    return _qr_lstsq(Y.T, moments.values, rank_tol)
