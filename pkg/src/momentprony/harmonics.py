"""Real orthonormal spherical harmonics on S^2 and quadrature rules.

Convention: fully normalized, no Condon-Shortley phase. For degree ``k`` the
``2k + 1`` harmonics are indexed by ``l = 1 .. 2k+1`` with signed order
``m = l - k - 1``::

    m < 0 : sqrt(1/pi)  * Pbar_k^|m|(cos theta) * sin(|m| phi)
    m = 0 : sqrt(1/2pi) * Pbar_k^0(cos theta)
    m > 0 : sqrt(1/pi)  * Pbar_k^m(cos theta) * cos(m phi)

so ``l`` runs over sine orders ``k..1``, the zonal harmonic, then cosine
orders ``1..k``. ``Pbar`` is the associated Legendre function normalized to
unit L2 norm on [-1, 1]. Flattened over all degrees ``k <= n`` the harmonic
``(k, l)`` sits in column ``k**2 + l - 1``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

UNIT_TOL = 1e-12


def harmonic_dimension(k: int) -> int:
    """Dimension of the degree-``k`` harmonic space on S^2."""
    return 2 * k + 1


def cumulative_dimension(n: int) -> int:
    return (n + 1) ** 2


def flat_index(k: int, l: int) -> int:
    if k < 0 or not 1 <= l <= 2 * k + 1:
        raise ValueError(f"invalid harmonic index (k={k}, l={l})")
    return k * k + l - 1


def harmonic_indices(n: int) -> list[tuple[int, int]]:
    return [(k, l) for k in range(n + 1) for l in range(1, 2 * k + 2)]


@lru_cache(maxsize=32)
def degree_order_arrays(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Degree ``k`` and signed order ``m`` for every flat column up to ``n``."""
    k = np.concatenate([np.full(2 * j + 1, j) for j in range(n + 1)])
    m = np.concatenate([np.arange(-j, j + 1) for j in range(n + 1)])
    k.setflags(write=False)
    m.setflags(write=False)
    return k, m


def normalized_legendre(n: int, z, s=None) -> np.ndarray:
    """Normalized associated Legendre functions ``Pbar_k^m(z)``.

    Returns an array of shape ``z.shape + (n+1, n+1)`` indexed ``[..., k, m]``
    (zero for ``m > k``). ``s`` is ``sqrt(1 - z**2)``; pass it when it is
    available more accurately than by subtraction (e.g. from Cartesian
    coordinates).
    """
    z = np.asarray(z, dtype=float)
    if s is None:
        s = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    s = np.asarray(s, dtype=float)
    out = np.zeros(z.shape + (n + 1, n + 1))
    m = np.arange(n + 1)
    # sectoral terms Pbar_m^m by a running product over m
    ratio = np.sqrt((2 * m[1:] + 1) / (2 * m[1:]))
    pmm = np.empty(z.shape + (n + 1,))
    pmm[..., 0] = np.sqrt(0.5)
    for j in range(1, n + 1):
        pmm[..., j] = ratio[j - 1] * s * pmm[..., j - 1]
    out[..., m, m] = pmm
    if n == 0:
        return out
    out[..., m[:-1] + 1, m[:-1]] = np.sqrt(2 * m[:-1] + 3) * z[..., None] * pmm[..., :-1]
    # three-term recursion in degree, vectorized over the order
    for k in range(2, n + 1):
        mm = m[: k - 1]
        a = np.sqrt((4 * k * k - 1) / (k * k - mm * mm))
        a_prev = np.sqrt((4 * (k - 1) ** 2 - 1) / ((k - 1) ** 2 - mm * mm))
        out[..., k, mm] = a * (z[..., None] * out[..., k - 1, mm] - out[..., k - 2, mm] / a_prev)
    return out


def check_unit(points, tol: float = UNIT_TOL) -> np.ndarray:
    x = np.asarray(points, dtype=float)
    if x.shape[-1] != 3:
        raise ValueError("sphere points must be 3-vectors")
    norms = np.linalg.norm(x, axis=-1)
    if np.any(np.abs(norms - 1.0) > tol):
        worst = float(np.max(np.abs(norms - 1.0)))
        raise ValueError(f"points are not unit vectors (max |norm - 1| = {worst:.3e})")
    return x


def _harmonics_unchecked(x: np.ndarray, n: int) -> np.ndarray:
    lead = x.shape[:-1]
    x = x.reshape(-1, 3)
    z = np.clip(x[:, 2], -1.0, 1.0)
    rho = np.hypot(x[:, 0], x[:, 1])
    phi = np.arctan2(x[:, 1], x[:, 0])
    P = normalized_legendre(n, z, rho)
    kk, mm = degree_order_arrays(n)
    am = np.abs(mm)
    angle = np.outer(phi, am)
    trig = np.where(mm > 0, np.cos(angle), np.sin(angle))
    trig[:, mm == 0] = 1.0 / np.sqrt(2.0)
    out = P[:, kk, am] * trig / np.sqrt(np.pi)
    return out.reshape(lead + (len(mm),))


def real_harmonics(points, n: int, check: bool = True) -> np.ndarray:
    """All harmonics of degree ``<= n`` at ``points`` (shape (..., 3)).

    Returns shape ``(..., (n+1)**2)``, columns in flat order.
    """
    x = check_unit(points) if check else np.asarray(points, dtype=float)
    return _harmonics_unchecked(x, n)


def eval_harmonic(k: int, l: int, x) -> float:
    """Value of the single real harmonic ``Y_k^l`` at the unit vector ``x``."""
    j = flat_index(k, l)
    x = check_unit(np.asarray(x, dtype=float).reshape(3))
    return float(_harmonics_unchecked(x[None, :], k)[0, j])


@dataclass(frozen=True)
class SphericalFourierMatrix:
    """Harmonics evaluated at the support, shape ``M x (n+1)^2``."""

    order: int
    values: np.ndarray

    @property
    def shape(self):
        return self.values.shape


def assemble_spherical_fourier(points, n: int) -> SphericalFourierMatrix:
    x = np.atleast_2d(np.asarray(points, dtype=float))
    return SphericalFourierMatrix(n, real_harmonics(x, n))


def product_rule(degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre (polar) x trapezoidal (azimuth) rule on S^2.

    Integrates every spherical polynomial of total degree ``<= degree``
    exactly. Returns ``(points, weights)`` with weights summing to 4*pi.
    """
    n_polar = degree // 2 + 1
    n_azimuth = degree + 1
    z, wz = np.polynomial.legendre.leggauss(n_polar)
    phi = 2 * np.pi * np.arange(n_azimuth) / n_azimuth
    s = np.sqrt(1.0 - z * z)
    pts = np.stack(
        [
            np.outer(s, np.cos(phi)).ravel(),
            np.outer(s, np.sin(phi)).ravel(),
            np.repeat(z, n_azimuth),
        ],
        axis=1,
    )
    w = np.repeat(wz, n_azimuth) * (2 * np.pi / n_azimuth)
    return pts, w


def fibonacci_sphere(count: int) -> np.ndarray:
    """Quasi-uniform spherical Fibonacci point set."""
    i = np.arange(count, dtype=float) + 0.5
    z = 1.0 - 2.0 * i / count
    golden = (1.0 + 5.0**0.5) / 2.0
    phi = 2.0 * np.pi * i / golden
    s = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    return np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=1)
