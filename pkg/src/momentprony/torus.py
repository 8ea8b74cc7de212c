"""Fourier (Vandermonde) and Toeplitz moment matrices on the d-torus.

Row/column labels of both matrices follow the row-major enumeration of the
box ``{0..n}^d``. The Fourier matrix has entries ``exp(2 pi i k.t_j)`` and the
Toeplitz matrix is built so that ``T_n = F_n^* D F_n`` holds exactly, i.e. the
entry in row ``k`` and column ``l`` is the moment ``f(l - k)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

from .errors import IncompleteMomentsError, RankDeficientError
from .indexing import box, symmetric_box
from .kernels import DEFAULT_RANK_TOL, KernelBasis, column_space, numerical_kernel
from .measures import TORUS, MomentTable, TorusEnsemble

# full SVD below this matrix size, column-block route above
DENSE_LIMIT = 1600


def exponential_basis(points, n: int) -> np.ndarray:
    """``exp(2 pi i k.x)`` for ``k`` in the box ``{0..n}^d``; shape ``(P, (n+1)^d)``."""
    x = np.atleast_2d(np.asarray(points, dtype=float))
    P, d = x.shape
    ks = np.arange(n + 1)
    out = np.ones((P, 1), dtype=complex)
    for axis in range(d):
        f = np.exp(2j * np.pi * np.outer(x[:, axis], ks))
        out = (out[:, :, None] * f[:, None, :]).reshape(P, -1)
    return out


@dataclass(frozen=True)
class FourierMatrix:
    order: int
    values: np.ndarray

    @property
    def shape(self):
        return self.values.shape


def assemble_fourier(points, n: int) -> FourierMatrix:
    return FourierMatrix(n, exponential_basis(points, n))


@dataclass(frozen=True, eq=False)
class ToeplitzMatrix:
    """Multilevel Toeplitz moment matrix of order ``n``.

    Entries are looked up in ``moments`` on demand, so large instances can be
    probed column block by column block without forming the full matrix.
    """

    moments: MomentTable
    order: int

    @property
    def dimension(self) -> int:
        return self.moments.dimension

    @property
    def size(self) -> int:
        return (self.order + 1) ** self.dimension

    @cached_property
    def labels(self) -> np.ndarray:
        return box(self.dimension, self.order).array

    def columns(self, cols) -> np.ndarray:
        """Selected columns (positions in the box enumeration)."""
        K = self.labels
        L = K[np.asarray(cols)]
        diff = L[None, :, :] - K[:, None, :] + self.moments.order
        return self.moments.values[tuple(np.moveaxis(diff, -1, 0))]

    @cached_property
    def dense(self) -> np.ndarray:
        a = self.columns(np.arange(self.size))
        a.setflags(write=False)
        return a


def assemble_toeplitz(moments: MomentTable, n: int | None = None) -> ToeplitzMatrix:
    if moments.domain != TORUS:
        raise ValueError("Toeplitz assembly needs torus moments")
    if n is None:
        n = moments.order
    if n > moments.order:
        raise IncompleteMomentsError((n,) * moments.dimension)
    return ToeplitzMatrix(moments, n)


def factorized_toeplitz(ensemble: TorusEnsemble, n: int) -> np.ndarray:
    """Debug assembler ``F_n^* D F_n`` from ground truth."""
    F = exponential_basis(ensemble.points, n)
    return F.conj().T @ (ensemble.coefficients[:, None] * F)


def _box_positions(d: int, n: int, m: int) -> np.ndarray:
    """Positions of the sub-box ``{0..m}^d`` inside the ``{0..n}^d`` enumeration."""
    sub = box(d, m).array
    return np.ravel_multi_index(tuple(sub.T), (n + 1,) * d)


def toeplitz_kernel(T: ToeplitzMatrix, rank_tol: float = DEFAULT_RANK_TOL, method: str = "auto") -> KernelBasis:
    """Kernel / signal-space split of a Toeplitz moment matrix.

    ``method="svd"`` runs a full SVD of the dense matrix. ``method="columns"``
    uses that ``T_n = F_n^* D F_n`` has the column space of ``F_n^*``: the
    column blocks indexed by the sub-boxes ``{0..m}^d`` have rank
    ``rank F_m``, which stops growing exactly when it reaches the sparsity,
    so the first block whose rank agrees with the next one spans the whole
    signal space. ``"auto"`` picks the SVD for matrices up to
    ``DENSE_LIMIT`` rows.
    """
    meta = dict(domain=TORUS, dimension=T.dimension, order=T.order)
    if method == "auto":
        method = "svd" if T.size <= DENSE_LIMIT else "columns"
    if method == "svd":
        return numerical_kernel(T.dense, rank_tol, **meta)
    if method != "columns":
        raise ValueError(f"unknown method {method!r}")
    d, n = T.dimension, T.order
    prev_rank = -1
    for m in range(n + 1):
        U, s = column_space(T.columns(_box_positions(d, n, m)), rank_tol)
        if U.shape[1] == prev_rank:
            return KernelBasis(U, s, rank_tol, **meta)
        prev_rank = U.shape[1]
    return KernelBasis(U, s, rank_tol, **meta)


@dataclass(frozen=True)
class CoefficientFit:
    coefficients: np.ndarray
    residual_norm: float


def _symmetric_design(points, n: int) -> np.ndarray:
    k = symmetric_box(np.atleast_2d(points).shape[1], n).array
    return np.exp(2j * np.pi * k @ np.atleast_2d(points).T)


def recover_coefficients(points, moments: MomentTable, n: int | None = None, rank_tol: float = 1e-10) -> CoefficientFit:
    """Least-squares coefficients for a known support.

    Solves ``sum_j c_j exp(2 pi i k.t_j) = f(k)`` over the symmetric box of
    order ``n`` by a QR factorization of the tall design matrix.
    """
    if n is None:
        n = moments.order
    t = np.atleast_2d(np.asarray(points, dtype=float))
    A = _symmetric_design(t, n)
    b = moments.truncate(n).values.ravel()
    return _qr_lstsq(A, b, rank_tol)


def _qr_lstsq(A: np.ndarray, b: np.ndarray, rank_tol: float) -> CoefficientFit:
    Q, R = scipy.linalg.qr(A, mode="economic")
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag.min() <= rank_tol * diag.max():
        raise RankDeficientError("coefficient system rank-deficient")
    c = scipy.linalg.solve_triangular(R, Q.conj().T @ b)
    return CoefficientFit(c, float(np.linalg.norm(A @ c - b)))
