"""Gaunt coefficients of the real spherical harmonics.

``c(k,l; r,s; t,u) = integral over S^2 of Y_k^l Y_r^s Y_t^u``, i.e. the
expansion coefficients of the product ``Y_k^l * Y_r^s`` in the harmonic
basis. They are computed by quadrature, separately in the polar angle
(Gauss-Legendre) and the azimuth (trapezoidal rule), since every real
harmonic factors into a Legendre part and a trigonometric part.

The table stores only pairs with ``flat(k,l) <= flat(r,s)``; lookups and
contractions restore the symmetric half.
"""
from __future__ import annotations

import json
import logging
import os
import tempfile
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .harmonics import cumulative_dimension, flat_index, normalized_legendre

log = logging.getLogger(__name__)

CACHE_VERSION = 1
DROP_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class GauntTable:
    """Sparse Gaunt table for ``k, r <= order`` and ``t <= k + r``.

    ``a``, ``b`` are flat harmonic indices of the two factors (``a <= b``),
    ``c`` the flat index of the product term, ``value`` the coefficient.
    """

    order: int
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    value: np.ndarray
    quadrature_degree: int
    tolerance: float = DROP_TOL

    def __len__(self) -> int:
        return self.value.size

    @cached_property
    def _keys(self) -> tuple[np.ndarray, np.ndarray]:
        nt = cumulative_dimension(2 * self.order)
        key = (self.a.astype(np.int64) * nt + self.b) * nt + self.c
        perm = np.argsort(key)
        return key[perm], perm

    def coefficient(self, k: int, l: int, r: int, s: int, t: int, u: int) -> float:
        a, b, c = flat_index(k, l), flat_index(r, s), flat_index(t, u)
        if max(k, r) > self.order:
            raise KeyError(f"degree above table order {self.order}")
        if a > b:
            a, b = b, a
        nt = cumulative_dimension(2 * self.order)
        key = (a * nt + b) * nt + c
        keys, perm = self._keys
        i = np.searchsorted(keys, key)
        if i < keys.size and keys[i] == key:
            return float(self.value[perm[i]])
        return 0.0

    def expansion(self, k: int, l: int, r: int, s: int) -> np.ndarray:
        """Coefficient vector of ``Y_k^l * Y_r^s`` over flat indices ``t <= 2*order``."""
        a, b = sorted((flat_index(k, l), flat_index(r, s)))
        sel = (self.a == a) & (self.b == b)
        out = np.zeros(cumulative_dimension(2 * self.order))
        out[self.c[sel]] = self.value[sel]
        return out

    def truncate(self, order: int) -> "GauntTable":
        if order > self.order:
            raise ValueError("cannot truncate to a larger order")
        lim = cumulative_dimension(order)
        sel = self.b < lim
        return GauntTable(order, self.a[sel], self.b[sel], self.c[sel], self.value[sel],
                          self.quadrature_degree, self.tolerance)

    def records(self):
        """Iterate ``(k, l, r, s, t, u, c)`` over the stored half."""
        for a, b, c, v in zip(self.a, self.b, self.c, self.value):
            yield (*_unflat(int(a)), *_unflat(int(b)), *_unflat(int(c)), float(v))


def _unflat(j: int) -> tuple[int, int]:
    k = int(np.sqrt(j))
    while k * k > j:
        k -= 1
    while (k + 1) ** 2 <= j:
        k += 1
    return k, j - k * k + 1


def _azimuth_integrals(n: int, degree: int) -> np.ndarray:
    """``G[m1, m2, m3] = int_0^{2pi} phi_m1 phi_m2 phi_m3`` for signed orders.

    ``m1, m2`` range over ``-n..n`` and ``m3`` over ``-2n..2n``; ``phi_m`` is
    the normalized trigonometric factor of the harmonic convention.
    """
    count = degree + 1
    phi = 2 * np.pi * np.arange(count) / count

    def trig(L):
        m = np.arange(-L, L + 1)
        am = np.abs(m)
        vals = np.where(m > 0, np.cos(np.outer(phi, am)), np.sin(np.outer(phi, am)))
        vals[:, m == 0] = 1.0 / np.sqrt(2.0)
        return vals / np.sqrt(np.pi)

    t1, t3 = trig(n), trig(2 * n)
    g = np.einsum("p,pa,pb,pc->abc", np.full(count, 2 * np.pi / count), t1, t1, t3, optimize=True)
    g[np.abs(g) < 1e-14] = 0.0
    return g


def gaunt_coefficients(n: int, tolerance: float = DROP_TOL) -> GauntTable:
    """All Gaunt coefficients for factor degrees ``k, r <= n``."""
    if n < 0:
        raise ValueError("order must be >= 0")
    # integrands Y_k Y_r Y_t with t <= k + r have degree <= 4n
    degree = 4 * n + 1
    z, wz = np.polynomial.legendre.leggauss(degree // 2 + 1)
    P = normalized_legendre(2 * n, z)  # [node, k, m]
    G = _azimuth_integrals(n, degree)
    L = 2 * n

    out_a, out_b, out_c, out_v = [], [], [], []
    for am in range(n + 1):
        A = P[:, am:n + 1, am]
        for bm in range(n + 1):
            B = P[:, bm:n + 1, bm]
            AB = (A[:, :, None] * B[:, None, :]).reshape(len(z), -1)
            k = np.arange(am, n + 1)[:, None, None]
            r = np.arange(bm, n + 1)[None, :, None]
            for cm in sorted({am + bm, abs(am - bm)}):
                if cm > L:
                    continue
                C = P[:, cm:L + 1, cm]
                theta = ((AB * wz[:, None]).T @ C).reshape(n + 1 - am, n + 1 - bm, -1)
                t = np.arange(cm, L + 1)[None, None, :]
                allowed = (t >= np.abs(k - r)) & (t <= k + r) & ((k + r + t) % 2 == 0)
                for m1 in {am, -am}:
                    for m2 in {bm, -bm}:
                        for m3 in {cm, -cm}:
                            g = G[m1 + n, m2 + n, m3 + L]
                            if g == 0.0:
                                continue
                            val = theta * g
                            fa = k * k + k + m1
                            fb = r * r + r + m2
                            keep = allowed & (np.abs(val) > tolerance) & (fa <= fb)
                            idx = np.nonzero(keep)
                            if not idx[0].size:
                                continue
                            kk, rr, tt = k[idx[0], 0, 0], r[0, idx[1], 0], t[0, 0, idx[2]]
                            out_a.append((kk * kk + kk + m1).astype(np.int32))
                            out_b.append((rr * rr + rr + m2).astype(np.int32))
                            out_c.append((tt * tt + tt + m3).astype(np.int32))
                            out_v.append(val[idx])
    cat = (lambda xs, dt: np.concatenate(xs).astype(dt) if xs else np.zeros(0, dt))
    return GauntTable(
        n,
        cat(out_a, np.int32),
        cat(out_b, np.int32),
        cat(out_c, np.int32),
        cat(out_v, float),
        degree,
        tolerance,
    )


def default_cache_dir() -> Path:
    env = os.environ.get("MOMENTPRONY_CACHE")
    if env:
        return Path(env)
    base = os.environ.get("XDG_CACHE_HOME") or os.path.join(os.path.expanduser("~"), ".cache")
    return Path(base) / "momentprony"


def cache_path(n: int, cache_dir: Path | None = None) -> Path:
    return Path(cache_dir or default_cache_dir()) / f"gaunt_n{n}.npz"


def save_table(table: GauntTable, path: Path) -> None:
    """Write atomically: temp file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {
        "version": CACHE_VERSION,
        "n": table.order,
        "quadrature_degree": table.quadrature_degree,
        "tolerance": table.tolerance,
    }
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".npz.tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            idx = np.int16 if table.c.size == 0 or table.c.max() < 2**15 else np.int32
            np.savez(
                fh,
                header=np.array(json.dumps(header)),
                a=table.a.astype(idx),
                b=table.b.astype(idx),
                c=table.c.astype(idx),
                value=table.value,
            )
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_table(path: Path, n: int, tolerance: float = DROP_TOL) -> GauntTable | None:
    """Load a cached table; ``None`` if missing, unreadable or stale."""
    try:
        with np.load(path, allow_pickle=False) as data:
            header = json.loads(str(data["header"]))
            expected = {"version": CACHE_VERSION, "n": n, "quadrature_degree": 4 * n + 1, "tolerance": tolerance}
            if header != expected:
                log.info("gaunt cache %s has header %s, expected %s; recomputing", path, header, expected)
                return None
            a, b, c = (data[key].astype(np.int32) for key in "abc")
            return GauntTable(n, a, b, c, data["value"], header["quadrature_degree"], tolerance)
    except (OSError, KeyError, ValueError):
        return None


def cached_gaunt(n: int, cache_dir: Path | None = None, use_cache: bool = True) -> GauntTable:
    """Gaunt table of order ``n`` from the on-disk cache, computing it if needed."""
    if not use_cache:
        return gaunt_coefficients(n)
    path = cache_path(n, cache_dir)
    table = load_table(path, n) if path.exists() else None
    if table is None:
        table = gaunt_coefficients(n)
        try:
            save_table(table, path)
        except OSError as exc:
            log.warning("could not write gaunt cache %s: %s", path, exc)
    return table
