import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_rotation, sphere_instance
from momentprony.errors import IncompleteMomentsError
from momentprony.gaunt import cached_gaunt
from momentprony.harmonics import cumulative_dimension, real_harmonics
from momentprony.kernels import numerical_kernel
from momentprony.measures import SPHERE, MomentTable, SphereEnsemble, required_order, sphere_moments
from momentprony.sphere import (
    assemble_spherical_moment_matrix,
    factorized_moment_matrix,
    recover_sphere_coefficients,
)


def rel_fro(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def test_north_pole_is_outer_product():
    e = SphereEnsemble([[0, 0, 1.0]], [1.0])
    H = assemble_spherical_moment_matrix(sphere_moments(e, 2), 1).values
    y = real_harmonics(e.points, 1)[0]
    assert np.max(np.abs(H - np.outer(y, y))) < 1e-14


def test_zero_measure():
    m = MomentTable(SPHERE, 3, 4, np.zeros(25))
    assert not np.any(assemble_spherical_moment_matrix(m, 2).values)


def test_three_points_kernel_dimension_six():
    e = sphere_instance(8, 3, 0.8)
    H = assemble_spherical_moment_matrix(sphere_moments(e, 4), 2)
    basis = H.kernel(1e-8)
    assert basis.rank == 3 and basis.kernel_dimension == 6
    assert numerical_kernel(real_harmonics(e.points, 2), 1e-8).rank == 3


@pytest.mark.parametrize("n", [1, 3, 6])
def test_factorization(n):
    for seed in range(4):
        e = sphere_instance(seed, 5)
        H = assemble_spherical_moment_matrix(sphere_moments(e, 2 * n), n).values
        assert rel_fro(H, factorized_moment_matrix(e, n)) < 1e-12


def test_longer_table_is_truncated():
    e = sphere_instance(1, 4)
    a = assemble_spherical_moment_matrix(sphere_moments(e, 4), 2).values
    b = assemble_spherical_moment_matrix(sphere_moments(e, 9), 2, cached_gaunt(4)).values
    assert np.allclose(a, b, atol=1e-14)


def test_short_table_is_rejected():
    e = sphere_instance(1, 4)
    with pytest.raises(IncompleteMomentsError, match="degree 6"):
        assemble_spherical_moment_matrix(sphere_moments(e, 5), 3)


def test_symmetric():
    e = sphere_instance(2, 6)
    H = assemble_spherical_moment_matrix(sphere_moments(e, 8), 4).values
    assert np.array_equal(H, H.T)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31))
def test_rotation_invariance_of_spectra(seed):
    r = np.random.default_rng(seed)
    e = sphere_instance(seed % 1000, 4)
    Q = random_rotation(r)
    rot = SphereEnsemble(e.points @ Q.T, e.coefficients)
    n = 3
    sy = np.linalg.svd(real_harmonics(e.points, n), compute_uv=False)
    sy_rot = np.linalg.svd(real_harmonics(rot.points, n), compute_uv=False)
    assert np.allclose(sy, sy_rot, atol=1e-8)
    sh = np.linalg.svd(assemble_spherical_moment_matrix(sphere_moments(e, 2 * n), n).values, compute_uv=False)
    sh_rot = np.linalg.svd(assemble_spherical_moment_matrix(sphere_moments(rot, 2 * n), n).values, compute_uv=False)
    assert np.allclose(sh, sh_rot, atol=1e-8)


def test_ingham_full_rank():
    q = 1.2
    n = required_order(q, SPHERE).full_rank
    for seed in range(10):
        e = sphere_instance(seed, 5, q)
        assert numerical_kernel(real_harmonics(e.points, n)).rank == 5


def test_sphere_coefficients():
    e = sphere_instance(5, 6, 0.5)
    fit = recover_sphere_coefficients(e.points, sphere_moments(e, 8))
    assert np.max(np.abs(fit.coefficients - e.coefficients)) < 1e-10
    assert cumulative_dimension(8) == 81
