"""Command-line driver: simulate, reconstruct, certify, validate.

Every command computes its full result before writing anything, and each
file is written atomically, so a failed run leaves no partial output.

Exit codes: 0 success, 2 non-identifiable or degenerate, 1 any other error.
Errors are printed to stdout as ``{"kind": "error", "error": {...}}``.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .errors import MomentError, NonIdentifiableError
from .kernels import DEFAULT_RANK_TOL
from .measures import (
    SPHERE,
    TORUS,
    TorusEnsemble,
    required_order,
    sphere_moments,
    sphere_separation,
    torus_moments,
    torus_separation,
)
from .pipeline import certify, default_order, reconstruct
from .simulate import make_rng, sample_sphere, sample_torus

EXIT_OK, EXIT_ERROR, EXIT_NONIDENTIFIABLE = 0, 1, 2


def parse_domain(text: str) -> tuple[str, int]:
    if text == SPHERE:
        return SPHERE, 3
    name, _, d = text.partition(":")
    if name == TORUS:
        try:
            dim = int(d or 1)
        except ValueError:
            dim = 0
        if dim >= 1:
            return TORUS, dim
    raise argparse.ArgumentTypeError(f"domain must be 'torus:d' or 'sphere', got {text!r}")


def parse_order(text: str):
    if text == "auto":
        return text
    try:
        n = int(text)
    except ValueError:
        n = -1
    if n < 0:
        raise argparse.ArgumentTypeError(f"order must be a non-negative integer or 'auto', got {text!r}")
    return n


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="momentprony", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--order", type=parse_order, default="auto", help="order n or 'auto'")

    s = sub.add_parser("simulate", parents=[common], help="draw an ensemble and write its moments")
    s.add_argument("--domain", type=parse_domain, required=True)
    s.add_argument("--sparsity", type=int, required=True)
    s.add_argument("--separation", type=float, default=None)
    s.add_argument("--seed", type=int, default=0)

    solve = argparse.ArgumentParser(add_help=False)
    solve.add_argument("--in", dest="inputs", type=Path, nargs="+", required=True,
                       help="moments file, optionally followed by a ground-truth ensemble file")
    solve.add_argument("--rank-tol", type=float, default=DEFAULT_RANK_TOL)
    solve.add_argument("--grid-res", type=int, default=None)

    sub.add_parser("reconstruct", parents=[common, solve], help="recover support and coefficients")
    sub.add_parser("certify", parents=[common, solve], help="build and check the dual certificate")

    v = sub.add_parser("validate", help="check file schemas, completeness and consistency")
    v.add_argument("--in", dest="inputs", type=Path, nargs="+", required=True)
    v.add_argument("--out", type=Path)
    return p


def _load_inputs(paths) -> tuple[dict, dict]:
    """Read JSON documents and sort them by their ``kind`` field."""
    found = {}
    for path in paths:
        doc = io.read_json(path)
        kind = doc.get("kind") if isinstance(doc, dict) else None
        if kind not in ("moments", "ensemble"):
            raise io.FormatError(f"{path}: unsupported document kind {kind!r}")
        if kind in found:
            raise io.FormatError(f"{path}: more than one {kind} document given")
        found[kind] = doc
    out = {}
    if "moments" in found:
        out["moments"] = io.moments_from_dict(found["moments"])
    if "ensemble" in found:
        out["ensemble"] = io.ensemble_from_dict(found["ensemble"])
    return found, out


def _domain_of(ensemble) -> str:
    return TORUS if isinstance(ensemble, TorusEnsemble) else SPHERE


def _separation(ensemble) -> float | None:
    if ensemble.sparsity < 2:
        return None
    sep = torus_separation if _domain_of(ensemble) == TORUS else sphere_separation
    return sep(ensemble.points)


def _bounds(domain: str, d: int, sep: float | None) -> dict | None:
    if sep is None:
        return None
    b = required_order(sep, domain, d)
    return {"identification": b.identification, "full_rank": b.full_rank}


def cmd_simulate(args) -> tuple[dict, int]:
    domain, d = args.domain
    if args.sparsity < 1:
        raise MomentError("sparsity must be at least 1")
    rng = make_rng(args.seed)
    if domain == TORUS:
        ens, sep = sample_torus(rng, args.sparsity, d, args.separation)
    else:
        ens, sep = sample_sphere(rng, args.sparsity, args.separation)
    bounds = _bounds(domain, d, sep)
    if args.order == "auto":
        # the achieved separation, not the requested one, decides the order
        n = bounds["identification"] if bounds else 1
    else:
        n = args.order
    moments = torus_moments(ens, n) if domain == TORUS else sphere_moments(ens, 2 * n)
    meta = {"seed": args.seed, "requested_separation": args.separation, "separation": sep,
            "order_bounds": bounds, "working_order": n}
    files = {
        "ensemble.json": io.dumps(io.ensemble_to_dict(ens, meta)),
        "moments.json": io.dumps(io.moments_to_dict(moments, meta)),
    }
    summary = {"kind": "simulation", "domain": domain, "dimension": d, "sparsity": ens.sparsity, **meta}
    return {"files": files, "summary": summary}, EXIT_OK


def _working_order(args, moments) -> int:
    return default_order(moments) if args.order == "auto" else args.order


def _floats(a) -> list:
    return np.asarray(a, dtype=float).tolist()


def _coefficients(c):
    if c is None:
        return None
    c = np.asarray(c)
    if np.iscomplexobj(c):
        return [[float(z.real), float(z.imag)] for z in c]
    return c.astype(float).tolist()


def _nullable(x):
    return None if x is None or not np.isfinite(x) else float(x)


def cmd_reconstruct(args) -> tuple[dict, int]:
    _, loaded = _load_inputs(args.inputs)
    if "moments" not in loaded:
        raise MomentError("reconstruct needs a moments file")
    moments = loaded["moments"]
    r = reconstruct(moments, _working_order(args, moments), args.rank_tol, args.grid_res, loaded.get("ensemble"))
    s = r.support
    doc = {
        "format_version": io.FORMAT_VERSION,
        "kind": "reconstruction",
        "domain": r.domain,
        "dimension": r.dimension,
        "order": r.order,
        "rank_tol": r.rank_tol,
        "estimated_sparsity": r.estimated_sparsity,
        "flat": r.flat,
        "kernel_dimension": r.kernel_dimension,
        "identified": r.identified,
        "points": _floats(s.points),
        "coefficients": _coefficients(r.coefficients),
        "residuals": _floats(s.residuals),
        "iterations": np.asarray(s.iterations, dtype=int).tolist(),
        "unresolved": [
            {"center": _floats(u.center), "best_residual": float(u.best_residual), "seeds": int(u.seeds)}
            for u in s.unresolved
        ],
        "coefficient_residual": _nullable(r.coefficient_residual),
        "matching_error": _nullable(r.matching_error),
        "coefficient_error": _nullable(r.coefficient_error),
        "notes": list(r.notes),
    }
    code = EXIT_OK if r.identified else EXIT_NONIDENTIFIABLE
    summary = {k: doc[k] for k in ("kind", "domain", "order", "estimated_sparsity", "flat", "kernel_dimension",
                                   "identified", "matching_error", "coefficient_error", "notes")}
    summary["recovered"] = s.count
    return {"files": {"reconstruction.json": io.dumps(doc)}, "summary": summary}, code


def cmd_certify(args) -> tuple[dict, int]:
    _, loaded = _load_inputs(args.inputs)
    if "moments" not in loaded:
        raise MomentError("certify needs a moments file")
    moments = loaded["moments"]
    truth = loaded.get("ensemble")
    c = certify(moments, _working_order(args, moments), args.rank_tol, args.grid_res,
                truth.points if truth is not None else None)
    rep = c.report
    doc = {
        "format_version": io.FORMAT_VERSION,
        "kind": "certificate",
        "domain": SPHERE,
        "order": c.certificate.order,
        "rank_tol": args.rank_tol,
        "sparsity": c.certificate.sparsity,
        "kernel_dimension": c.certificate.basis.kernel_dimension,
        "normalization": c.certificate.normalization,
        "points": _floats(c.points),
        "point_values": _floats(rep.point_values),
        "grid_size": int(c.grid.shape[0]),
        "grid_min": rep.grid_min,
        "grid_max": rep.grid_max,
        "exclusion_radius": rep.exclusion_radius,
        "margin": _nullable(rep.margin),
        "bounded": rep.bounded,
        "interpolating": rep.interpolating,
        "separated": rep.separated,
        "passed": rep.passed,
    }
    csv = io.field_csv(c.grid, {"kernel_surface": c.kernel_field, "certificate_surface": c.certificate_field})
    summary = {k: doc[k] for k in ("kind", "order", "sparsity", "kernel_dimension", "grid_min", "grid_max",
                                   "margin", "passed")}
    code = EXIT_OK if rep.passed else EXIT_NONIDENTIFIABLE
    return {"files": {"certificate.json": io.dumps(doc), "surface.csv": csv}, "summary": summary}, code


def cmd_validate(args) -> tuple[dict, int]:
    raw, loaded = _load_inputs(args.inputs)
    checks = {}
    if "moments" in loaded:
        m = loaded["moments"]
        checks["moments"] = {"domain": m.domain, "dimension": m.dimension, "order": m.order, "complete": True}
    if "ensemble" in loaded:
        e = loaded["ensemble"]
        sep = _separation(e)
        checks["ensemble"] = {"domain": _domain_of(e), "sparsity": e.sparsity, "separation": sep,
                              "order_bounds": _bounds(_domain_of(e), e.dimension, sep)}
    ok = True
    if "moments" in loaded and "ensemble" in loaded:
        m, e = loaded["moments"], loaded["ensemble"]
        if m.domain != _domain_of(e) or m.dimension != e.dimension:
            raise io.FormatError("moments and ensemble describe different domains")
        ref = torus_moments(e, m.order) if m.domain == TORUS else sphere_moments(e, m.order)
        scale = max(1.0, float(np.max(np.abs(ref.values))))
        err = float(np.max(np.abs(ref.values - m.values))) / scale
        ok = err <= 1e-10
        checks["consistency"] = {"max_relative_error": err, "consistent": ok}
    doc = {"format_version": io.FORMAT_VERSION, "kind": "validation", "valid": ok, "checks": checks}
    files = {"validation.json": io.dumps(doc)} if args.out else {}
    return {"files": files, "summary": doc}, EXIT_OK if ok else EXIT_ERROR


COMMANDS = {
    "simulate": cmd_simulate,
    "reconstruct": cmd_reconstruct,
    "certify": cmd_certify,
    "validate": cmd_validate,
}


def _error(exc: BaseException) -> str:
    return json.dumps({"format_version": io.FORMAT_VERSION, "kind": "error",
                       "error": {"type": type(exc).__name__, "message": str(exc)}})


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        result, code = COMMANDS[args.command](args)
        if args.out is not None:
            for name, text in result["files"].items():
                io.atomic_write(args.out / name, text)
    except NonIdentifiableError as exc:
        print(_error(exc))
        return EXIT_NONIDENTIFIABLE
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(_error(exc))
        return EXIT_ERROR
    print(json.dumps(result["summary"], allow_nan=True))
    return code


if __name__ == "__main__":
    sys.exit(main())
