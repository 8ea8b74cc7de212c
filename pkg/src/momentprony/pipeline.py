"""End-to-end reconstruction and certification from a moment table."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .certificate import (
    CertificateReport,
    SphereCertificate,
    build_certificate,
    certificate_surface,
    kernel_surface,
    validate_certificate,
)
from .errors import NoKernelError, RankDeficientError
from .gaunt import cached_gaunt
from .harmonics import fibonacci_sphere
from .kernels import DEFAULT_RANK_TOL
from .measures import SPHERE, TORUS, MomentTable
from .sphere import assemble_spherical_moment_matrix, recover_sphere_coefficients
from .torus import recover_coefficients
from .variety import MIN_SPHERE_GRID, RecoveredSupport, ZeroLocator, extract_support, match_points, moment_kernel


def default_order(moments: MomentTable) -> int:
    """Largest order the table supports (sphere matrices need degree 2n)."""
    return moments.order if moments.domain == TORUS else moments.order // 2


@dataclass
class Reconstruction:
    domain: str
    dimension: int
    order: int
    rank_tol: float
    estimated_sparsity: int
    flat: Optional[bool]
    kernel_dimension: int
    support: RecoveredSupport
    coefficients: Optional[np.ndarray]
    coefficient_residual: Optional[float]
    notes: list = field(default_factory=list)
    matching_error: Optional[float] = None
    coefficient_error: Optional[float] = None

    @property
    def identified(self) -> bool:
        return (
            self.flat is not False
            and not self.support.unresolved
            and not self.support.truncated
            and self.support.count == self.estimated_sparsity
            and self.coefficients is not None
        )


def reconstruct(
    moments: MomentTable,
    n: int | None = None,
    rank_tol: float = DEFAULT_RANK_TOL,
    grid_resolution: int | None = None,
    truth=None,
    method: str = "auto",
) -> Reconstruction:
    """Sparsity, support and coefficients from moments of order ``n``.

    The flat-extension flag compares the numerical rank at orders ``n - 1``
    and ``n``, so no moments beyond those of the working order are needed.
    Raises :class:`NoKernelError` when the order-``n`` matrix has full rank.
    """
    if n is None:
        n = default_order(moments)
    table = cached_gaunt(n) if moments.domain == SPHERE else None
    kernel = moment_kernel(moments, n, rank_tol, method, table)
    notes = []
    flat = None
    if n >= 1:
        flat = moment_kernel(moments, n - 1, rank_tol, method, table).rank == kernel.rank
        if not flat:
            notes.append(f"rank grows from order {n - 1} to {n}: sparsity not certified")
    if kernel.kernel_dimension == 0:
        raise NoKernelError("no kernel: order too small or M = matrix size")
    support = extract_support(ZeroLocator(kernel, grid_resolution=grid_resolution))
    if support.truncated:
        notes.append(f"zero set has more than {support.count - 1} points; search stopped")
    if support.unresolved:
        notes.append(f"{len(support.unresolved)} unresolved region(s)")
    if support.count != kernel.rank:
        notes.append(f"recovered {support.count} points but the moment matrix has rank {kernel.rank}")

    coef, res = None, None
    if support.count:
        try:
            fit = (
                recover_coefficients(support.points, moments, n)
                if moments.domain == TORUS
                else recover_sphere_coefficients(support.points, moments)
            )
            coef, res = fit.coefficients, fit.residual_norm
        except RankDeficientError as exc:
            notes.append(str(exc))

    out = Reconstruction(
        moments.domain,
        moments.dimension,
        n,
        rank_tol,
        kernel.rank,
        flat,
        kernel.kernel_dimension,
        support,
        coef,
        res,
        notes,
    )
    if truth is not None:
        perm, err = match_points(moments.domain, support.points, truth.points)
        out.matching_error = err
        if np.isfinite(err) and coef is not None:
            out.coefficient_error = float(np.max(np.abs(coef[perm] - truth.coefficients)))
    return out


@dataclass
class Certification:
    certificate: SphereCertificate
    report: CertificateReport
    points: np.ndarray
    grid: np.ndarray
    kernel_field: np.ndarray
    certificate_field: np.ndarray


def certify(
    moments: MomentTable,
    n: int | None = None,
    rank_tol: float = DEFAULT_RANK_TOL,
    grid_resolution: int | None = None,
    points=None,
) -> Certification:
    """Dual certificate from the signal space of the spherical moment matrix.

    ``points`` (ground truth) are used for validation when given; otherwise
    the support is recovered from the same kernel.
    """
    if moments.domain != SPHERE:
        raise ValueError("certificates are constructed on the sphere only")
    if n is None:
        n = default_order(moments)
    H = assemble_spherical_moment_matrix(moments, n, cached_gaunt(n))
    cert = build_certificate(H, n, rank_tol)
    if cert.vacuous:
        raise NoKernelError("no kernel: the certificate is the constant 1 and carries no information")
    if points is None:
        support = extract_support(ZeroLocator(cert.basis, grid_resolution=grid_resolution))
        points = support.points
    points = np.atleast_2d(np.asarray(points, dtype=float))
    count = grid_resolution or max(20 * (n + 1) ** 2, MIN_SPHERE_GRID)
    grid = fibonacci_sphere(count)
    report = validate_certificate(cert, points, grid)
    return Certification(cert, report, points, grid, kernel_surface(cert.basis, grid), certificate_surface(cert, grid))
