import hashlib
import json
import subprocess
import sys

import numpy as np
import pytest

from momentprony import io
from momentprony.cli import main
from momentprony.measures import TorusEnsemble, required_order, torus_moments, torus_separation


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out.strip().splitlines()
    return code, json.loads(out[-1]) if out else None


def digest(folder):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(folder.iterdir())}


def test_simulate_torus_separation(tmp_path, capsys):
    code, summary = run(capsys, "simulate", "--domain", "torus:2", "--sparsity", 7, "--separation", 0.1,
                        "--seed", 4, "--order", 5, "--out", tmp_path)
    assert code == 0
    e = io.ensemble_from_dict(io.read_json(tmp_path / "ensemble.json"))
    assert e.sparsity == 7 and torus_separation(e.points) > 0.1
    assert summary["separation"] == torus_separation(e.points)
    bound = required_order(summary["separation"], "torus", 2).identification
    assert summary["order_bounds"]["identification"] == bound <= 32


def test_simulate_single_point(tmp_path, capsys):
    code, _ = run(capsys, "simulate", "--domain", "torus:1", "--sparsity", 1, "--order", 3, "--out", tmp_path)
    assert code == 0
    m = io.moments_from_dict(io.read_json(tmp_path / "moments.json"))
    assert np.allclose(np.abs(m.values), np.abs(m.values[0]))


def test_simulate_sphere_example(tmp_path, capsys):
    code, _ = run(capsys, "simulate", "--domain", "sphere", "--sparsity", 50, "--seed", 1, "--order", 30,
                  "--out", tmp_path)
    assert code == 0
    e = io.ensemble_from_dict(io.read_json(tmp_path / "ensemble.json"))
    m = io.moments_from_dict(io.read_json(tmp_path / "moments.json"))
    assert e.points.shape == (50, 3) and m.order == 60


def test_simulate_auto_order_uses_achieved_separation(tmp_path, capsys):
    code, summary = run(capsys, "simulate", "--domain", "torus:1", "--sparsity", 3, "--separation", 0.05,
                        "--seed", 2, "--out", tmp_path)
    assert code == 0
    assert summary["working_order"] == summary["order_bounds"]["identification"]
    assert summary["working_order"] <= int(1 / 0.05 + 2) + 1


def test_determinism(tmp_path, capsys):
    for name in ("a", "b"):
        argv = ["simulate", "--domain", "torus:2", "--sparsity", 5, "--separation", 0.15, "--seed", 9,
                "--out", tmp_path / name]
        assert run(capsys, *argv)[0] == 0
        assert run(capsys, "reconstruct", "--in", tmp_path / name / "moments.json",
                   tmp_path / name / "ensemble.json", "--out", tmp_path / name)[0] == 0
    assert digest(tmp_path / "a") == digest(tmp_path / "b")


def test_reconstruct_round_trip(tmp_path, capsys):
    run(capsys, "simulate", "--domain", "torus:2", "--sparsity", 6, "--separation", 0.12, "--seed", 3,
        "--out", tmp_path)
    code, summary = run(capsys, "reconstruct", "--in", tmp_path / "ensemble.json", tmp_path / "moments.json",
                        "--out", tmp_path)
    assert code == 0 and summary["identified"]
    doc = io.read_json(tmp_path / "reconstruction.json")
    assert doc["format_version"] == io.FORMAT_VERSION and doc["kind"] == "reconstruction"
    assert doc["matching_error"] < 1e-6 and doc["coefficient_error"] < 1e-6
    truth = io.ensemble_from_dict(io.read_json(tmp_path / "ensemble.json"))
    rec = TorusEnsemble(doc["points"], [complex(*c) for c in doc["coefficients"]])
    assert rec.sparsity == truth.sparsity


def test_reconstruct_sphere_kernel_dimension(tmp_path, capsys):
    run(capsys, "simulate", "--domain", "sphere", "--sparsity", 3, "--separation", 1.0, "--seed", 1,
        "--order", 2, "--out", tmp_path)
    code, summary = run(capsys, "reconstruct", "--in", tmp_path / "moments.json", "--out", tmp_path)
    assert code == 0
    assert summary["kernel_dimension"] == 6 and summary["recovered"] == 3


def test_reconstruct_below_bound_exit_code(tmp_path, capsys):
    # a 2-torus instance at order 1: the kernel polynomial vanishes on a curve
    run(capsys, "simulate", "--domain", "torus:2", "--sparsity", 3, "--seed", 0, "--order", 1, "--out", tmp_path)
    code, summary = run(capsys, "reconstruct", "--in", tmp_path / "moments.json", "--out", tmp_path)
    assert code == 2
    assert summary["flat"] is False or summary["notes"]
    # too few moments for any kernel
    run(capsys, "simulate", "--domain", "torus:1", "--sparsity", 6, "--seed", 0, "--order", 3,
        "--out", tmp_path / "full")
    code, err = run(capsys, "reconstruct", "--in", tmp_path / "full" / "moments.json", "--out", tmp_path / "full")
    assert code == 2 and err["kind"] == "error" and err["error"]["type"] == "NoKernelError"
    assert not (tmp_path / "full" / "reconstruction.json").exists()


def test_certify_three_points(tmp_path, capsys):
    run(capsys, "simulate", "--domain", "sphere", "--sparsity", 3, "--separation", 1.0, "--seed", 1,
        "--order", 2, "--out", tmp_path)
    code, summary = run(capsys, "certify", "--in", tmp_path / "moments.json", tmp_path / "ensemble.json",
                        "--out", tmp_path)
    assert code == 0 and summary["passed"]
    header, data = io.read_field_csv(tmp_path / "surface.csv")
    assert header == ["x", "y", "z", "kernel_surface", "certificate_surface"]
    e = io.ensemble_from_dict(io.read_json(tmp_path / "ensemble.json"))
    cos = np.clip(data[:, :3] @ e.points.T, -1, 1)
    near = np.arccos(cos).min(axis=1) < 0.1
    # the kernel-surface valleys meet at the points
    assert data[near, 3].min() < np.quantile(data[:, 3], 0.05)
    doc = io.read_json(tmp_path / "certificate.json")
    assert np.allclose(doc["point_values"], 1, atol=1e-9)


def test_certify_empty_kernel_leaves_no_files(tmp_path, capsys):
    run(capsys, "simulate", "--domain", "sphere", "--sparsity", 9, "--seed", 1, "--order", 1, "--out", tmp_path)
    out = tmp_path / "cert"
    code, err = run(capsys, "certify", "--in", tmp_path / "moments.json", "--out", out)
    assert code == 2 and err["kind"] == "error"
    assert not out.exists()


def test_validate(tmp_path, capsys):
    run(capsys, "simulate", "--domain", "torus:1", "--sparsity", 3, "--seed", 1, "--order", 4, "--out", tmp_path)
    code, doc = run(capsys, "validate", "--in", tmp_path / "moments.json", tmp_path / "ensemble.json")
    assert code == 0 and doc["valid"] and doc["checks"]["consistency"]["consistent"]
    other = tmp_path / "other"
    run(capsys, "simulate", "--domain", "torus:1", "--sparsity", 3, "--seed", 2, "--order", 4, "--out", other)
    code, doc = run(capsys, "validate", "--in", tmp_path / "moments.json", other / "ensemble.json")
    assert code == 1 and not doc["valid"]


def test_incomplete_moments_rejected(tmp_path, capsys):
    m = torus_moments(TorusEnsemble([[0.2], [0.7]], [1.0, 2.0]), 3)
    doc = io.moments_to_dict(m)
    doc["entries"] = doc["entries"][1:]
    io.write_json(tmp_path / "moments.json", doc)
    for cmd in ("validate", "reconstruct"):
        code, err = run(capsys, cmd, "--in", tmp_path / "moments.json")
        assert code == 1 and err["error"]["type"] == "IncompleteMomentsError"


def test_order_above_table(tmp_path, capsys):
    io.write_json(tmp_path / "m.json", io.moments_to_dict(torus_moments(TorusEnsemble([[0.2]], [1.0]), 3)))
    code, err = run(capsys, "reconstruct", "--in", tmp_path / "m.json", "--order", 5)
    assert code == 1 and err["error"]["type"] == "IncompleteMomentsError"


def test_bad_input_file(tmp_path, capsys):
    (tmp_path / "x.json").write_text("{}")
    code, err = run(capsys, "reconstruct", "--in", tmp_path / "x.json")
    assert code == 1 and err["kind"] == "error"
    code, err = run(capsys, "reconstruct", "--in", tmp_path / "missing.json")
    assert code == 1


def test_infeasible_separation(tmp_path, capsys):
    code, err = run(capsys, "simulate", "--domain", "torus:1", "--sparsity", 30, "--separation", 0.1,
                    "--out", tmp_path)
    assert code == 1 and "largest achieved separation" in err["error"]["message"]
    assert not list(tmp_path.iterdir())


def test_argument_errors():
    with pytest.raises(SystemExit):
        main(["simulate", "--domain", "plane", "--sparsity", "2"])
    with pytest.raises(SystemExit):
        main(["reconstruct", "--in", "m.json", "--order", "-1"])


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "momentprony", "simulate", "--domain", "torus:1",
                           "--sparsity", "2", "--seed", "1", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["kind"] == "simulation"
