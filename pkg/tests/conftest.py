import numpy as np
import pytest
from scipy.special import factorial, lpmv

from momentprony.simulate import make_rng, sample_sphere, sample_torus


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_rotation(rng) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1
    return q


def torus_instance(seed, M, d, q=None, real=False):
    return sample_torus(make_rng(seed), M, d, q, real=real)[0]


def sphere_instance(seed, M, q=None):
    return sample_sphere(make_rng(seed), M, q)[0]


def legendre_harmonic(k, l, x):
    """Real harmonic built from scipy's associated Legendre functions.

    ``lpmv`` carries the Condon-Shortley phase, removed here by ``(-1)^m``.
    """
    m = l - k - 1
    a = abs(m)
    theta = np.arccos(np.clip(x[..., 2], -1, 1))
    phi = np.arctan2(x[..., 1], x[..., 0])
    norm = np.sqrt((2 * k + 1) / (4 * np.pi) * factorial(k - a) / factorial(k + a))
    p = (-1) ** a * lpmv(a, k, np.cos(theta)) * norm
    if m == 0:
        return p
    return np.sqrt(2) * p * (np.sin(a * phi) if m < 0 else np.cos(a * phi))
