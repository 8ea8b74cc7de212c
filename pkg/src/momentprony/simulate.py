"""Random test ensembles with a separation target.

Streams come from numpy's Philox counter-based generator seeded with the
user seed, so a seed reproduces the same ensemble on every platform numpy
supports. Draw order per round: all point coordinates (row-major), then
coefficient magnitudes, then phases or signs.
"""
from __future__ import annotations

import numpy as np

from .errors import SeparationError
from .measures import SphereEnsemble, TorusEnsemble, sphere_separation, torus_separation

MAX_ROUNDS = 100_000


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def _rejection(draw, separation, M: int, min_sep: float | None, max_rounds: int):
    best = -np.inf
    for _ in range(max_rounds):
        pts = draw()
        if M < 2:
            return pts, None
        try:
            sep = separation(pts)
        except SeparationError:
            continue
        if min_sep is None or sep > min_sep:
            return pts, sep
        best = max(best, sep)
    raise SeparationError(
        f"could not reach separation {min_sep} with {M} points in {max_rounds} rounds; "
        f"largest achieved separation {best:.6g}"
    )


def sample_torus(rng, M: int, d: int, min_sep: float | None = None, real: bool = False,
                 max_rounds: int = MAX_ROUNDS) -> tuple[TorusEnsemble, float | None]:
    """Uniform points on [0,1)^d; coefficients with modulus in [0.5, 1.5]."""
    pts, sep = _rejection(lambda: rng.random((M, d)), torus_separation, M, min_sep, max_rounds)
    mag = rng.uniform(0.5, 1.5, M)
    if real:
        coef = mag * rng.choice([-1.0, 1.0], M)
    else:
        coef = mag * np.exp(2j * np.pi * rng.random(M))
    return TorusEnsemble(pts, coef), sep


def _unit_vectors(rng, M: int) -> np.ndarray:
    g = rng.standard_normal((M, 3))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def sample_sphere(rng, M: int, min_sep: float | None = None,
                  max_rounds: int = MAX_ROUNDS) -> tuple[SphereEnsemble, float | None]:
    """Normalized Gaussian points on S^2; real coefficients of modulus in [0.5, 1.5]."""
    pts, sep = _rejection(lambda: _unit_vectors(rng, M), sphere_separation, M, min_sep, max_rounds)
    coef = rng.uniform(0.5, 1.5, M) * rng.choice([-1.0, 1.0], M)
    return SphereEnsemble(pts, coef), sep
