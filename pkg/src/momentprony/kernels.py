"""Numerical rank, kernels and signal spaces of dense matrices."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import SpectralGapError

DEFAULT_RANK_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class KernelBasis:
    """Orthonormal split of a coefficient space into signal space and kernel.

    ``signal`` holds the numerical-rank many orthonormal columns spanning the
    orthogonal complement of the kernel. The kernel basis itself is
    materialized lazily because for large moment matrices it is much bigger
    than the signal space and most consumers only need the projector.

    ``domain``/``dimension``/``order`` describe which polynomial basis the
    coefficient vectors refer to (``"torus"`` box exponentials or ``"sphere"``
    harmonics); they are ``None`` for a bare matrix.
    """

    signal: np.ndarray
    singular_values: np.ndarray
    rank_tol: float
    domain: Optional[str] = None
    dimension: Optional[int] = None
    order: Optional[int] = None
    _kernel: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.signal.shape[0]

    @property
    def rank(self) -> int:
        return self.signal.shape[1]

    @property
    def kernel_dimension(self) -> int:
        return self.size - self.rank

    @property
    def kernel(self) -> np.ndarray:
        if self._kernel is None:
            if self.rank == 0:
                k = np.eye(self.size, dtype=self.signal.dtype)
            else:
                q, _ = scipy.linalg.qr(self.signal, mode="full")
                k = q[:, self.rank:]
            object.__setattr__(self, "_kernel", k)
        return self._kernel

    def project_kernel(self, v: np.ndarray) -> np.ndarray:
        """Orthogonal projection of the rows of ``v`` onto the kernel."""
        return v - (v @ self.signal.conj()) @ self.signal.T

    def gap_ok(self, factor: float = 10.0) -> bool:
        """True if no singular value sits within ``factor`` of the threshold."""
        s = self.singular_values
        if s.size == 0 or s[0] == 0:
            return True
        tau = self.rank_tol * s[0]
        return not np.any((s > tau / factor) & (s < tau * factor))


def _check_tol(rank_tol: float):
    if not 0 < rank_tol < 1:
        raise ValueError("rank tolerance must lie in (0, 1)")


def numerical_kernel(matrix, rank_tol: float = DEFAULT_RANK_TOL, **meta) -> KernelBasis:
    """Split the row space of ``matrix`` by a full SVD.

    Singular values ``<= rank_tol * s_max`` count as zero. The kernel is the
    span of the corresponding right singular vectors; the signal space is its
    orthogonal complement.
    """
    _check_tol(rank_tol)
    a = np.atleast_2d(np.asarray(matrix))
    if a.size == 0:
        raise ValueError("matrix is empty")
    _, s, vh = np.linalg.svd(a, full_matrices=True)
    r = int(np.sum(s > rank_tol * s[0])) if s[0] > 0 else 0
    v = vh.conj().T
    return KernelBasis(v[:, :r], s, rank_tol, _kernel=v[:, r:], **meta)


def column_space(matrix, rank_tol: float = DEFAULT_RANK_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal basis of the numerical column space and the singular values."""
    _check_tol(rank_tol)
    a = np.atleast_2d(np.asarray(matrix))
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    r = int(np.sum(s > rank_tol * s[0])) if s.size and s[0] > 0 else 0
    return u[:, :r], s


def require_gap(basis: KernelBasis, factor: float = 10.0) -> KernelBasis:
    if not basis.gap_ok(factor):
        raise SpectralGapError(
            "spectral gap too small: singular values lie within "
            f"{factor}x of the rank threshold {basis.rank_tol:g} * s_max"
        )
    return basis
