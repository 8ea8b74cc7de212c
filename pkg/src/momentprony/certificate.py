"""Sum-of-squares dual certificate on S^2.

With an orthonormal basis ``p_1..p_M`` of the signal space (coefficient
vectors orthogonal to the kernel of ``Y_n``), the polynomial

    p(x) = (4 pi / N) * sum_{r <= M} p_r(x)^2,      N = (n+1)^2,

satisfies ``0 <= p <= 1`` on the sphere and equals 1 exactly on the support.
The upper bound is the addition theorem: summed over a full orthonormal
basis, ``sum_r p_r(x)^2 = N / (4 pi)`` for every unit ``x``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoKernelError
from .harmonics import cumulative_dimension, real_harmonics
from .kernels import DEFAULT_RANK_TOL, KernelBasis, numerical_kernel, require_gap
from .measures import SPHERE, required_order, sphere_separation
from .sphere import SphericalMomentMatrix
from .variety import domain_distance


@dataclass(frozen=True, eq=False)
class SphereCertificate:
    order: int
    basis: KernelBasis
    above_bound: bool | None = None

    @property
    def normalization(self) -> float:
        return 4 * np.pi / cumulative_dimension(self.order)

    @property
    def sparsity(self) -> int:
        return self.basis.rank

    @property
    def vacuous(self) -> bool:
        """True when the signal space is everything, so ``p`` is identically 1."""
        return self.basis.kernel_dimension == 0

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        Y = real_harmonics(np.reshape(x, (-1, 3)), self.order, check=False)
        p = self.normalization * np.sum((Y @ self.basis.signal) ** 2, axis=1)
        return p.reshape(x.shape[:-1])


def build_certificate(source, n: int, rank_tol: float = DEFAULT_RANK_TOL) -> SphereCertificate:
    """Certificate from known points (via ``Y_n``) or from a moment matrix.

    ``source`` is either an ``(M, 3)`` array of unit vectors or a
    :class:`SphericalMomentMatrix` whose signal space is used. Raises
    :class:`SpectralGapError` if the rank split is ambiguous.
    """
    above = None
    if isinstance(source, SphericalMomentMatrix):
        if source.order != n:
            raise ValueError(f"moment matrix has order {source.order}, expected {n}")
        basis = source.kernel(rank_tol)
    else:
        pts = np.atleast_2d(np.asarray(source, dtype=float))
        Y = real_harmonics(pts, n)
        basis = numerical_kernel(Y, rank_tol, domain=SPHERE, dimension=3, order=n)
        if pts.shape[0] > 1:
            above = n >= required_order(sphere_separation(pts), SPHERE).identification
    require_gap(basis)
    return SphereCertificate(n, basis, above)


@dataclass(frozen=True)
class CertificateReport:
    grid_min: float
    grid_max: float
    point_values: np.ndarray
    exclusion_radius: float
    margin: float
    bounded: bool
    interpolating: bool
    separated: bool

    @property
    def passed(self) -> bool:
        return self.bounded and self.interpolating and self.separated


def validate_certificate(
    cert: SphereCertificate,
    points,
    grid,
    exclusion_radius: float | None = None,
    tol: float = 1e-9,
) -> CertificateReport:
    """Check ``0 <= p <= 1`` on ``grid``, ``p = 1`` at ``points`` and the far-field margin.

    The margin is ``1 - max p(x)`` over grid nodes farther than
    ``exclusion_radius`` (default ``pi / (4n)``) from every point.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    if exclusion_radius is None:
        exclusion_radius = np.pi / (4 * max(cert.order, 1))
    pg = cert(grid)
    pv = cert(pts)
    far = domain_distance(SPHERE, grid, pts).min(axis=1) > exclusion_radius
    margin = float(1.0 - pg[far].max()) if far.any() else float("nan")
    return CertificateReport(
        grid_min=float(pg.min()),
        grid_max=float(pg.max()),
        point_values=pv,
        exclusion_radius=float(exclusion_radius),
        margin=margin,
        bounded=bool(pg.min() >= -tol and pg.max() <= 1 + tol),
        interpolating=bool(np.all(np.abs(pv - 1.0) <= tol)),
        separated=bool(margin > 0) if far.any() else True,
    )


def kernel_surface(kernel: KernelBasis, grid) -> np.ndarray:
    """``1 + 0.5 * min_r |p_r(x)|^(1/4)`` over the kernel polynomials."""
    if kernel.kernel_dimension == 0:
        raise NoKernelError("kernel surface needs a non-empty kernel")
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    Y = real_harmonics(grid, kernel.order, check=False)
    vals = np.abs(Y @ kernel.kernel)
    return 1.0 + 0.5 * np.min(vals, axis=1) ** 0.25


def certificate_surface(cert: SphereCertificate, grid) -> np.ndarray:
    """``1 + p(x) / 2``, the form in which the certificate is usually plotted."""
    return 1.0 + 0.5 * cert(grid)
