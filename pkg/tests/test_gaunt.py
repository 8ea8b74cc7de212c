import json

import numpy as np
import pytest

from conftest import legendre_harmonic
from momentprony.gaunt import (
    cache_path,
    cached_gaunt,
    gaunt_coefficients,
    load_table,
    save_table,
)
from momentprony.harmonics import cumulative_dimension, flat_index, harmonic_indices, product_rule, real_harmonics


@pytest.fixture(scope="module")
def table():
    return gaunt_coefficients(3)


def test_constant_coefficient(table):
    assert abs(table.coefficient(0, 1, 0, 1, 0, 1) - 1 / np.sqrt(4 * np.pi)) < 1e-15


def test_constant_factor_is_orthonormality(table):
    c = 1 / np.sqrt(4 * np.pi)
    for r, s in harmonic_indices(3):
        for t, u in harmonic_indices(6):
            expect = c if (r, s) == (t, u) else 0.0
            assert abs(table.coefficient(0, 1, r, s, t, u) - expect) < 1e-13


def test_expansion_reproduces_products(table, rng):
    x = rng.standard_normal((100, 3))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    Y = real_harmonics(x, 6)
    worst = 0.0
    for k, l in harmonic_indices(3):
        for r, s in harmonic_indices(3):
            prod = Y[:, flat_index(k, l)] * Y[:, flat_index(r, s)]
            worst = max(worst, np.max(np.abs(Y @ table.expansion(k, l, r, s) - prod)))
    assert worst < 1e-9


def test_against_independent_quadrature(table):
    # scipy-based harmonics on a finer product rule
    pts, w = product_rule(30)
    idx = harmonic_indices(3)
    Ys = {kl: legendre_harmonic(*kl, pts) for kl in harmonic_indices(6)}
    for (k, l) in idx[::3]:
        for (r, s) in idx[1::2]:
            for (t, u) in harmonic_indices(6)[::2]:
                ref = np.sum(w * Ys[(k, l)] * Ys[(r, s)] * Ys[(t, u)])
                assert abs(table.coefficient(k, l, r, s, t, u) - ref) < 1e-12


def test_symmetry_and_parity(table):
    for k, l, r, s, t, u, v in table.records():
        assert abs(table.coefficient(r, s, k, l, t, u) - v) == 0
        assert (k + r + t) % 2 == 0, "odd k+r+t must vanish"
        assert abs(k - r) <= t <= k + r


def test_truncate(table):
    small = table.truncate(2)
    ref = gaunt_coefficients(2)
    assert len(small) == len(ref)
    assert np.allclose(small.expansion(2, 3, 1, 2)[: cumulative_dimension(4)], ref.expansion(2, 3, 1, 2))
    with pytest.raises(ValueError):
        small.truncate(3)


def test_cache_round_trip(tmp_path, table):
    path = cache_path(3, tmp_path)
    save_table(table, path)
    loaded = load_table(path, 3)
    assert loaded is not None
    for key in ("a", "b", "c", "value"):
        assert np.array_equal(getattr(loaded, key), getattr(table, key))
    assert not list(tmp_path.glob("*.tmp"))


def test_cache_header_mismatch_recomputes(tmp_path, table):
    path = cache_path(3, tmp_path)
    save_table(table, path)
    with np.load(path) as data:
        parts = {k: data[k] for k in data.files}
    header = json.loads(str(parts["header"]))
    header["quadrature_degree"] = 9
    parts["header"] = np.array(json.dumps(header))
    np.savez(path, **parts)
    assert load_table(path, 3) is None
    fresh = cached_gaunt(3, tmp_path)
    assert np.array_equal(fresh.value, table.value)
    assert load_table(path, 3) is not None


def test_corrupt_cache_is_ignored(tmp_path):
    path = cache_path(1, tmp_path)
    path.write_bytes(b"not a zip")
    assert load_table(path, 1) is None
    assert len(cached_gaunt(1, tmp_path)) == len(gaunt_coefficients(1))
