"""Support recovery as the common zero set of the kernel polynomials.

Every kernel vector ``v`` of a moment matrix defines a polynomial
``p(x) = sum_k v_k phi_k(x)`` in the matrix's basis (box exponentials on the
torus, real harmonics on the sphere). The support is the common zero set of
all of them, located here by minimizing

    q(x) = sum_r |p_r(x)|^2 = || P_ker conj(phi(x)) ||^2

over the domain: grid seeding, damped Gauss-Newton refinement, then
deduplication. ``q`` does not depend on which orthonormal kernel basis is
used, so it is evaluated through the projector onto the kernel.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial import cKDTree

from .errors import IncompleteMomentsError, NoKernelError
from .gaunt import cached_gaunt
from .harmonics import fibonacci_sphere, real_harmonics
from .kernels import DEFAULT_RANK_TOL, KernelBasis
from .measures import SPHERE, TORUS, MomentTable
from .sphere import assemble_spherical_moment_matrix
from .torus import assemble_toeplitz, exponential_basis, toeplitz_kernel

log = logging.getLogger(__name__)

# coarsest default grids; below these the 4n / 20(n+1)^2 rules leave too
# few nodes per zero basin at small n
MIN_TORUS_GRID = 32
MIN_SPHERE_GRID = 2000


def basis_values(kernel: KernelBasis, x) -> np.ndarray:
    """Rows ``phi(x)`` of the basis the kernel coefficients refer to."""
    if kernel.domain == TORUS:
        return exponential_basis(np.reshape(x, (-1, kernel.dimension)), kernel.order)
    if kernel.domain == SPHERE:
        return real_harmonics(np.reshape(x, (-1, 3)), kernel.order, check=False)
    raise ValueError("kernel basis carries no domain")


def kernel_polynomials(kernel: KernelBasis, x) -> np.ndarray:
    """Values ``p_r(x)`` of every kernel basis polynomial, shape ``(P, N - rank)``."""
    return basis_values(kernel, x) @ kernel.kernel


def _certificate(kernel: KernelBasis, phi: np.ndarray) -> np.ndarray:
    if kernel.kernel_dimension == 0:
        return np.zeros(phi.shape[0])
    res = kernel.project_kernel(phi.conj())
    return np.sum(np.abs(res) ** 2, axis=1)


def certificate_value(kernel: KernelBasis, x) -> np.ndarray | float:
    """``q(x) = sum_r |p_r(x)|^2`` over the kernel; zero exactly on the common zeros."""
    x = np.asarray(x, dtype=float)
    q = _certificate(kernel, basis_values(kernel, x))
    return float(q[0]) if x.ndim == 1 else q


def basis_scale(kernel: KernelBasis) -> float:
    """``sum_k |phi_k(x)|^2``, constant over the domain."""
    if kernel.domain == TORUS:
        return float(kernel.size)
    return kernel.size / (4 * np.pi)


def torus_distance(a, b) -> np.ndarray:
    """Wrap-around l-infinity distance between rows of ``a`` and ``b``."""
    diff = np.abs(np.asarray(a)[:, None, :] - np.asarray(b)[None, :, :]) % 1.0
    return np.minimum(diff, 1.0 - diff).max(axis=-1)


def geodesic_distance(a, b) -> np.ndarray:
    a, b = np.asarray(a), np.asarray(b)
    cross = np.linalg.norm(np.cross(a[:, None, :], b[None, :, :]), axis=-1)
    return np.arctan2(cross, a @ b.T)


def domain_distance(domain: str, a, b) -> np.ndarray:
    return torus_distance(a, b) if domain == TORUS else geodesic_distance(a, b)


@dataclass
class ZeroLocator:
    """Configuration for :func:`extract_support`.

    ``residual_tol`` is relative: a point is accepted when
    ``q(x) <= residual_tol * sum_k |phi_k(x)|^2``. ``None`` for
    ``grid_resolution`` / ``dedup_radius`` selects the defaults (torus: ``4n``
    nodes per axis, at least 32, and radius ``1/(4n)``; sphere:
    ``20 (n+1)^2`` Fibonacci nodes, at least 2000, and radius ``pi/(4n)``). Grid local minima with
    ``q < seed_fraction * sum_k |phi_k|^2`` seed the refinement; other low
    nodes farther than ``skip_factor * spacing`` from every refined endpoint
    are refined too. Accepted zeros closer than ``merge_tol`` are one zero,
    while ``radius`` groups failed seeds into unresolved regions. The search
    stops after ``max_points`` distinct zeros (default ``2 * rank + 8``).
    """

    kernel: KernelBasis
    grid_resolution: Optional[int] = None
    residual_tol: float = 1e-12
    dedup_radius: Optional[float] = None
    max_iter: int = 50
    seed_fraction: float = 0.5
    step_tol: float = 1e-12
    merge_tol: float = 1e-7
    skip_factor: float = 1.0
    max_points: Optional[int] = None

    def __post_init__(self):
        if self.kernel.domain not in (TORUS, SPHERE):
            raise ValueError("kernel basis must carry a torus or sphere domain")
        if not self.residual_tol > 0:
            raise ValueError("residual tolerance must be positive")
        if self.dedup_radius is not None and not self.dedup_radius > 0:
            raise ValueError("dedup radius must be positive")
        if self.grid_resolution is not None and self.grid_resolution < 2:
            raise ValueError("grid resolution must be >= 2")

    @property
    def domain(self) -> str:
        return self.kernel.domain

    @property
    def radius(self) -> float:
        if self.dedup_radius is not None:
            return self.dedup_radius
        n = max(self.kernel.order, 1)
        return 1.0 / (4 * n) if self.domain == TORUS else np.pi / (4 * n)

    @property
    def resolution(self) -> int:
        if self.grid_resolution is not None:
            return self.grid_resolution
        n = max(self.kernel.order, 1)
        if self.domain == TORUS:
            return max(4 * n, MIN_TORUS_GRID)
        return max(20 * (n + 1) ** 2, MIN_SPHERE_GRID)

    @property
    def spacing(self) -> float:
        """Typical distance between neighbouring grid nodes."""
        if self.domain == TORUS:
            return 1.0 / self.resolution
        return float(np.sqrt(4 * np.pi / self.resolution))


@dataclass(frozen=True)
class UnresolvedRegion:
    center: np.ndarray
    best_residual: float
    seeds: int


@dataclass(frozen=True)
class RecoveredSupport:
    domain: str
    points: np.ndarray
    residuals: np.ndarray
    iterations: np.ndarray
    unresolved: list = field(default_factory=list)
    truncated: bool = False

    @property
    def count(self) -> int:
        return self.points.shape[0]


def _torus_grid(kernel: KernelBasis, G: int) -> tuple[np.ndarray, np.ndarray]:
    d, n = kernel.dimension, kernel.order
    if G < n + 1:
        raise ValueError(f"torus grid needs at least n+1 = {n + 1} nodes per axis")
    total = np.zeros((G,) * d)
    for r in range(kernel.rank):
        coef = np.zeros((G,) * d, dtype=complex)
        coef[(slice(0, n + 1),) * d] = kernel.signal[:, r].reshape((n + 1,) * d)
        total += np.abs(np.fft.ifftn(coef) * G**d) ** 2
    q = np.clip(kernel.size - total, 0.0, None).ravel()
    axes = np.meshgrid(*[np.arange(G) / G] * d, indexing="ij")
    return np.stack([a.ravel() for a in axes], axis=1), q


def _torus_local_minima(q: np.ndarray) -> np.ndarray:
    d = q.ndim
    is_min = np.ones(q.shape, dtype=bool)
    for off in itertools.product((-1, 0, 1), repeat=d):
        if any(off):
            is_min &= q <= np.roll(q, off, axis=tuple(range(d)))
    return is_min.ravel()


def _sphere_grid(kernel: KernelBasis, count: int, chunk: int = 4096) -> tuple[np.ndarray, np.ndarray]:
    pts = fibonacci_sphere(count)
    q = np.empty(count)
    for lo in range(0, count, chunk):
        Y = real_harmonics(pts[lo:lo + chunk], kernel.order, check=False)
        q[lo:lo + chunk] = _certificate(kernel, Y)
    return pts, q


def _sphere_local_minima(pts: np.ndarray, q: np.ndarray, neighbours: int = 8) -> np.ndarray:
    _, idx = cKDTree(pts).query(pts, k=neighbours + 1)
    return q <= q[idx[:, 1:]].min(axis=1)


def _tangent_frame(x: np.ndarray) -> np.ndarray:
    a = np.eye(3)[np.argmin(np.abs(x))]
    u = np.cross(x, a)
    u /= np.linalg.norm(u)
    return np.stack([u, np.cross(x, u)])


def _retract(x: np.ndarray, frame: np.ndarray, step: np.ndarray) -> np.ndarray:
    y = x + step @ frame
    return y / np.linalg.norm(y, axis=-1, keepdims=True)


class _Refiner:
    """Damped Gauss-Newton on the stacked residual ``P_ker conj(phi(x))``.

    The projected residual is an isometric image of the vector of kernel
    polynomial values, so the iteration is the one for ``(p_r(x))_r``.
    """

    def __init__(self, locator: ZeroLocator):
        self.loc = locator
        self.kernel = locator.kernel
        self.scale = basis_scale(self.kernel)
        if self.kernel.domain == TORUS:
            from .indexing import box

            self.labels = box(self.kernel.dimension, self.kernel.order).array

    def residual(self, x: np.ndarray) -> np.ndarray:
        return self.kernel.project_kernel(basis_values(self.kernel, x).conj())

    def q(self, x: np.ndarray) -> np.ndarray:
        return np.sum(np.abs(self.residual(x)) ** 2, axis=-1) / self.scale

    def _torus_step(self, x):
        v = basis_values(self.kernel, x)[0].conj()
        rho = self.kernel.project_kernel(v[None, :])[0]
        cols = (-2j * np.pi * self.labels * v[:, None]).T
        J = self.kernel.project_kernel(cols).T
        A = np.vstack([J.real, J.imag])
        b = -np.concatenate([rho.real, rho.imag])
        return np.linalg.lstsq(A, b, rcond=None)[0]

    def _sphere_step(self, x, h: float = 1e-5):
        frame = _tangent_frame(x)
        probes = np.vstack([x[None, :], _retract(x, frame, np.array([[h, 0], [-h, 0], [0, h], [0, -h]]))])
        R = self.residual(probes)
        J = np.stack([(R[1] - R[2]) / (2 * h), (R[3] - R[4]) / (2 * h)], axis=1)
        step = np.linalg.lstsq(J, -R[0], rcond=None)[0]
        return step, frame

    def refine(self, x0: np.ndarray) -> tuple[np.ndarray, float, int]:
        x = np.array(x0, dtype=float)
        qx = float(self.q(x[None, :])[0])
        it = 0
        for it in range(1, self.loc.max_iter + 1):
            if qx == 0.0:
                break
            if self.kernel.domain == TORUS:
                step = self._torus_step(x)
                move = lambda a: np.mod(x + a * step, 1.0)
            else:
                tstep, frame = self._sphere_step(x)
                step = tstep
                move = lambda a: _retract(x, frame, a * tstep[None, :])[0]
            alpha = 1.0
            while True:
                y = move(alpha)
                qy = float(self.q(y[None, :])[0])
                if qy < qx or alpha < 1e-6:
                    break
                alpha *= 0.5
            if not qy < qx:
                break
            x, qx = y, qy
            if alpha * np.linalg.norm(step) < self.loc.step_tol:
                break
        return x, qx, it


def extract_support(locator: ZeroLocator) -> RecoveredSupport:
    """Locate the common zeros of the kernel polynomials.

    Raises :class:`NoKernelError` when the kernel is empty. Seeds whose
    refinement never reaches the residual tolerance, and which lie away from
    every accepted point, are reported as unresolved regions instead of being
    dropped or guessed.
    """
    kernel = locator.kernel
    if kernel.kernel_dimension == 0:
        raise NoKernelError("no kernel: order too small or M = matrix size")

    if locator.domain == TORUS:
        grid, q = _torus_grid(kernel, locator.resolution)
        minima = _torus_local_minima(q.reshape((locator.resolution,) * kernel.dimension))
    else:
        grid, q = _sphere_grid(kernel, locator.resolution)
        minima = _sphere_local_minima(grid, q)
    # nearest to a true zero x_j, q / scale <= 1 - |k(x, x_j)|^2 for the
    # normalized reproducing kernel k, well below one half on the default grids
    low = q < locator.seed_fraction * basis_scale(kernel)
    seeds = np.nonzero(minima & low)[0]
    seeds = seeds[np.argsort(q[seeds])]
    # low nodes outside every explored basin get refined as well, so that
    # zeros whose grid basins merged with a neighbour are not missed
    extra = np.nonzero(low & ~minima)[0]
    extra = extra[np.argsort(q[extra])]
    log.debug("%d seeds (+%d low nodes) from %d grid nodes", seeds.size, extra.size, grid.shape[0])

    refiner = _Refiner(locator)
    radius = locator.radius
    cap = locator.max_points if locator.max_points is not None else 2 * kernel.rank + 8
    kept, failed = [], []
    truncated = False
    visited = np.empty((0, grid.shape[1]))
    queue = [(s, False) for s in seeds] + [(s, True) for s in extra]
    skip = locator.skip_factor * locator.spacing
    for s, is_extra in queue:
        if is_extra and visited.size and domain_distance(locator.domain, grid[s][None, :], visited).min() <= skip:
            continue
        x, qx, it = refiner.refine(grid[s])
        # both ends of the descent count as explored
        visited = np.vstack([visited, grid[s][None, :], x[None, :]])
        if qx > locator.residual_tol:
            failed.append((x, qx, it))
            continue
        if kept and domain_distance(locator.domain, x[None, :], np.array([k[0] for k in kept])).min() <= locator.merge_tol:
            continue
        kept.append((x, qx, it))
        if len(kept) > cap:
            # a zero set this large is not a finite support of the rank
            truncated = True
            break
    kept.sort(key=lambda item: item[1])

    unresolved: list[UnresolvedRegion] = []
    clusters: list[list] = []
    for x, qx, it in sorted(failed, key=lambda item: item[1]):
        if kept and domain_distance(locator.domain, x[None, :], np.array([k[0] for k in kept])).min() <= radius:
            continue
        for cl in clusters:
            if domain_distance(locator.domain, x[None, :], cl[0][0][None, :])[0, 0] <= radius:
                cl.append((x, qx))
                break
        else:
            clusters.append([(x, qx)])
    for cl in clusters:
        unresolved.append(UnresolvedRegion(cl[0][0], float(cl[0][1]), len(cl)))

    dim = kernel.dimension if locator.domain == TORUS else 3
    pts = np.array([k[0] for k in kept]).reshape(-1, dim)
    return RecoveredSupport(
        locator.domain,
        pts,
        np.array([k[1] for k in kept]),
        np.array([k[2] for k in kept], dtype=int),
        unresolved,
        truncated,
    )


@dataclass(frozen=True)
class SparsityEstimate:
    sparsity: int
    flat: bool
    rank_n: int
    rank_next: int


def moment_kernel(moments: MomentTable, n: int, rank_tol: float = DEFAULT_RANK_TOL, method: str = "auto",
                  gaunt=None) -> KernelBasis:
    """Kernel split of the order-``n`` moment matrix (Toeplitz or spherical).

    ``gaunt`` may supply a Gaunt table of order ``>= n`` for the sphere.
    """
    if moments.domain == TORUS:
        return toeplitz_kernel(assemble_toeplitz(moments, n), rank_tol, method)
    return assemble_spherical_moment_matrix(moments, n, gaunt or cached_gaunt(n)).kernel(rank_tol)


def estimate_sparsity(moments: MomentTable, n: int, rank_tol: float = DEFAULT_RANK_TOL, method: str = "auto") -> SparsityEstimate:
    """Numerical rank at order ``n`` and whether it persists at ``n + 1``."""
    need = n + 1 if moments.domain == TORUS else 2 * n + 2
    if moments.order < need:
        idx = (need,) * moments.dimension if moments.domain == TORUS else (need, 1)
        raise IncompleteMomentsError(idx, f"flat-extension check needs moments through order {need}")
    if moments.domain == TORUS:
        r0 = toeplitz_kernel(assemble_toeplitz(moments, n), rank_tol, method).rank
        r1 = toeplitz_kernel(assemble_toeplitz(moments, n + 1), rank_tol, method).rank
    else:
        table = cached_gaunt(n + 1)
        r0 = assemble_spherical_moment_matrix(moments, n, table).kernel(rank_tol).rank
        r1 = assemble_spherical_moment_matrix(moments, n + 1, table).kernel(rank_tol).rank
    return SparsityEstimate(r0, r0 == r1, r0, r1)


def match_points(domain: str, recovered, truth) -> tuple[np.ndarray, float]:
    """Optimal assignment of recovered points to ground truth.

    Returns ``(order, max_error)`` where ``recovered[order]`` lines up with
    ``truth``; ``max_error`` is ``inf`` if the counts differ.
    """
    recovered, truth = np.asarray(recovered), np.asarray(truth)
    if recovered.shape[0] != truth.shape[0]:
        return np.arange(recovered.shape[0]), float("inf")
    if truth.shape[0] == 0:
        return np.zeros(0, dtype=int), 0.0
    cost = domain_distance(domain, truth, recovered)
    rows, cols = linear_sum_assignment(cost)
    return cols[np.argsort(rows)], float(cost[rows, cols].max())
