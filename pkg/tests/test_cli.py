import subprocess
import sys

import numpy as np
import pytest

from axihdiv.cli import build_parser, run


def _run(argv, capsys):
    code = run(argv)
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("argv", [
    ["mixed", "--mode", "0"],
    ["mixed", "--mode", "x"],
    ["mg", "--tol", "1.5"],
    ["mg", "--tol", "0"],
    ["mixed", "--max-level", "0"],
    ["mixed", "--max-level", "12"],
    ["mixed", "--max-level", "5", "--level-cap", "4"],
    ["mg", "--max-level", "1"],
    ["verify"],
    ["verify", "--suite", "bogus"],
    ["mesh", "--domain", "disk"],
    [],
])
def test_usage_errors_exit_2(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        run(argv)
    assert exc.value.code == 2


def test_help_documents_csv_schema(capsys):
    with pytest.raises(SystemExit) as exc:
        run(["--help"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    assert "level,err_z,rate_z,err_p,rate_p,err_PiSp,rate_PiSp" in out
    assert "rate_k=<K>" in out


def test_verify_exit_zero(capsys):
    code, out, _ = _run(["verify", "--suite", "complex", "--mode", "-1", "--level", "4",
                         "--domain", "lshape"], capsys)
    assert code == 0
    assert "Pass" in out and "Fail" not in out


def test_verify_failure_exit_one(monkeypatch, capsys):
    import axihdiv.verify as verify
    monkeypatch.setattr(verify, "run_suite",
                        lambda *a: verify.CheckResult("forced", 1.0, 0.0))
    code, out, _ = _run(["verify", "--suite", "complex"], capsys)
    assert code == 1 and "Fail" in out


def test_solver_failure_exit_one(monkeypatch, capsys):
    import axihdiv.mixed as mixed

    def boom(*a, **kw):
        raise RuntimeError("factorization is exactly singular")

    monkeypatch.setattr(mixed, "error_table", boom)
    code, _, err = _run(["mixed", "--max-level", "2"], capsys)
    assert code == 1 and "singular" in err


def test_mg_non_convergence_exit_one(capsys):
    code, out, err = _run(["mg", "--max-level", "3", "--max-iters", "1"], capsys)
    assert code == 1
    assert "no convergence" in err
    assert out.startswith("level,rate_k=1\n")


def test_mixed_csv(tmp_path, capsys):
    path = tmp_path / "t.csv"
    code, out, err = _run(["mixed", "--mode", "2", "--max-level", "4", "--out", str(path)], capsys)
    assert code == 0 and out == ""
    lines = path.read_text().splitlines()
    assert lines[0] == "level,err_z,rate_z,err_p,rate_p,err_PiSp,rate_PiSp"
    assert [l.split(",")[0] for l in lines[1:]] == ["1", "2", "3", "4"]
    assert lines[1].split(",")[2] == ""
    assert "err_z" in err


def test_mg_csv_schema_and_determinism(tmp_path, capsys):
    argv = ["mg", "--domain", "lshape", "--mode", "1", "--mode", "-2", "--max-level", "4",
            "--seed", "3"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert _run(argv + ["--out", str(a)], capsys)[0] == 0
    assert _run(argv + ["--out", str(b)], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0] == "level,rate_k=1,rate_k=-2"
    rows = np.array([[float(x) for x in l.split(",")] for l in lines[1:]])
    assert rows[:, 0].tolist() == [2, 3, 4]
    assert np.all((rows[:, 1:] > 0) & (rows[:, 1:] < 0.5))


def test_mg_geometric_not_above_arithmetic(capsys):
    base = ["mg", "--max-level", "3"]
    _, ar, _ = _run(base, capsys)
    _, ge, _ = _run(base + ["--rate-stat", "geometric"], capsys)
    a = [float(l.split(",")[1]) for l in ar.splitlines()[1:]]
    g = [float(l.split(",")[1]) for l in ge.splitlines()[1:]]
    assert all(x <= y + 1e-15 for x, y in zip(g, a))


def test_mg_trace(capsys):
    code, _, err = _run(["mg", "--max-level", "2", "--trace", "--smoother", "additive"], capsys)
    assert code == 0 and "iterations" in err


def test_dump_matrix(tmp_path, capsys):
    out = tmp_path / "m.json"
    code, _, _ = _run(["mesh", "--domain", "lshape", "--max-level", "2", "--out", str(out),
                       "--dump-matrix"], capsys)
    assert code == 0
    coo = tmp_path / "m_lshape_k1_level2.coo"
    rows = [l.split() for l in coo.read_text().splitlines()]
    from axihdiv.mesh import MeshHierarchy
    L = MeshHierarchy.build("lshape", 2).finest
    n = L.ne + L.nt
    i = np.array([int(r[0]) for r in rows])
    j = np.array([int(r[1]) for r in rows])
    assert i.max() == n - 1 and j.max() == n - 1
    assert {(a, b) for a, b in zip(i, j)} == {(b, a) for a, b in zip(i, j)}


def test_mesh_json(capsys):
    import json
    code, out, err = _run(["mesh", "--max-level", "2"], capsys)
    doc = json.loads(out)
    assert code == 0 and len(doc["triangles"]) == 8
    assert "8 triangles" in err


def test_parser_defaults():
    args = build_parser().parse_args(["mg"])
    assert args.tol == 1e-7 and args.seed == 7 and args.smoother == "multiplicative"
    assert args.rate_stat == "arithmetic" and args.max_level is None
    args = build_parser().parse_args(["mixed"])
    assert args.max_level == 8 and args.mode == 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "axihdiv", "verify", "--suite", "transfer",
                           "--level", "2"], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "Pass" in proc.stdout
