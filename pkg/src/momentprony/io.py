"""JSON and CSV file formats.

All JSON documents carry ``format_version`` and ``kind``. Floats are written
with Python's shortest round-trip ``repr``, so parsing a file reproduces the
in-memory doubles bit for bit. Complex numbers are ``[re, im]`` pairs.

ensemble::

    {"format_version": 1, "kind": "ensemble", "domain": "torus", "dimension": 2,
     "points": [[t1, t2], ...], "coefficients": [[re, im], ...], "meta": {...}}

  Sphere ensembles use ``"dimension": 3``, unit-vector points and real
  coefficients.

moments::

    {"format_version": 1, "kind": "moments", "domain": "torus", "dimension": 2,
     "order": n, "entries": [[k1, k2, re, im], ...], "meta": {...}}

  Sphere entries are ``[k, l, value]`` for ``k <= order``, ``1 <= l <= 2k+1``.
"""
from __future__ import annotations

import csv
import io as _io
import json
import os
import tempfile
from pathlib import Path
from typing import Any

import numpy as np

from .errors import MomentError
from .harmonics import harmonic_indices
from .indexing import symmetric_box
from .measures import SPHERE, TORUS, MomentTable, SphereEnsemble, TorusEnsemble

FORMAT_VERSION = 1


class FormatError(MomentError):
    pass


def _c(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def ensemble_to_dict(ensemble, meta: dict | None = None) -> dict:
    if isinstance(ensemble, TorusEnsemble):
        doc = {
            "domain": TORUS,
            "dimension": ensemble.dimension,
            "points": ensemble.points.tolist(),
            "coefficients": [_c(z) for z in ensemble.coefficients],
        }
    else:
        doc = {
            "domain": SPHERE,
            "dimension": 3,
            "points": ensemble.points.tolist(),
            "coefficients": ensemble.coefficients.tolist(),
        }
    return {"format_version": FORMAT_VERSION, "kind": "ensemble", **doc, "meta": meta or {}}


def _header(doc: dict, kind: str) -> None:
    if not isinstance(doc, dict):
        raise FormatError("document must be a JSON object")
    if doc.get("format_version") != FORMAT_VERSION:
        raise FormatError(f"unsupported format_version {doc.get('format_version')!r}")
    if doc.get("kind") != kind:
        raise FormatError(f"expected kind {kind!r}, got {doc.get('kind')!r}")
    if doc.get("domain") not in (TORUS, SPHERE):
        raise FormatError(f"unknown domain {doc.get('domain')!r}")


def ensemble_from_dict(doc: dict):
    _header(doc, "ensemble")
    try:
        if doc["domain"] == TORUS:
            coef = [complex(re, im) for re, im in doc["coefficients"]]
            pts = np.array(doc["points"], dtype=float).reshape(len(coef), int(doc["dimension"]))
            return TorusEnsemble(pts, coef)
        return SphereEnsemble(np.array(doc["points"], dtype=float), np.array(doc["coefficients"], dtype=float))
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed ensemble document: {exc}") from exc


def moments_to_dict(table: MomentTable, meta: dict | None = None) -> dict:
    if table.domain == TORUS:
        entries = [[*k, *_c(table[k])] for k in symmetric_box(table.dimension, table.order)]
    else:
        entries = [[k, l, float(table[(k, l)])] for k, l in harmonic_indices(table.order)]
    return {
        "format_version": FORMAT_VERSION,
        "kind": "moments",
        "domain": table.domain,
        "dimension": table.dimension,
        "order": table.order,
        "entries": entries,
        "meta": meta or {},
    }


def moments_from_dict(doc: dict) -> MomentTable:
    """Parse a moment document; incomplete tables raise ``IncompleteMomentsError``."""
    _header(doc, "moments")
    try:
        d, n = int(doc["dimension"]), int(doc["order"])
        if doc["domain"] == TORUS:
            entries = {tuple(int(v) for v in e[:d]): complex(e[d], e[d + 1]) for e in doc["entries"]}
        else:
            entries = {(int(e[0]), int(e[1])): float(e[2]) for e in doc["entries"]}
    except (KeyError, TypeError, IndexError, ValueError) as exc:
        raise FormatError(f"malformed moments document: {exc}") from exc
    return MomentTable.from_entries(doc["domain"], d, n, entries)


def dumps(doc: Any) -> str:
    return json.dumps(doc, indent=1, allow_nan=True) + "\n"


def atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: Path, doc: Any) -> None:
    atomic_write(path, dumps(doc))


def read_json(path: Path) -> Any:
    with open(path) as fh:
        return json.load(fh)


def field_csv(points: np.ndarray, columns: dict[str, np.ndarray]) -> str:
    """CSV text: one row per point, coordinates first, then the named fields."""
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    coords = ["x", "y", "z"] if points.shape[1] == 3 else [f"t{i + 1}" for i in range(points.shape[1])]
    w.writerow(coords + list(columns))
    cols = list(columns.values())
    for i, p in enumerate(points):
        w.writerow([repr(float(v)) for v in p] + [repr(float(c[i])) for c in cols])
    return buf.getvalue()


def read_field_csv(path: Path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)
