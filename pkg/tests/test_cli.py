import csv
import os

import pytest

from kaclab.cli import main
from kaclab.selftest import run_selftest

CONFIGS = os.path.join(os.path.dirname(__file__), "..", "configs")


def _write(tmp_path, text):
    p = tmp_path / "c.ini"
    p.write_text(text)
    return str(p)


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_selftest_all_pass():
    checks = run_selftest()
    assert [c.name for c in checks if not c.passed] == []


def test_cli_selftest(tmp_out, capsys):
    assert main(["selftest", "--out", tmp_out]) == 0
    rows = _rows(os.path.join(tmp_out, "selftest.csv"))
    assert rows and all(r["passed"] == "true" for r in rows)


def test_config_error_exit_code(tmp_path, capsys):
    cfg = _write(tmp_path, "[run]\nn_samples = 0\n")
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 2
    assert "run.n_samples" in capsys.readouterr().err
    assert main(["simulate", "--threads", "0", "--out", str(tmp_path)]) == 2
    assert main(["simulate", "--seed", "-1", "--out", str(tmp_path)]) == 2


def test_invariant_failure_exit_code(tmp_path, capsys, monkeypatch):
    import kaclab.cli as cli
    from kaclab.selftest import Check
    monkeypatch.setattr(cli, "run_selftest", lambda seed, threads: [Check("forced", 1.0, 0.0, False)])
    assert main(["selftest", "--out", str(tmp_path)]) == 1
    err = capsys.readouterr().err
    assert "forced" in err and "selftest.csv" in err
    cfg = _write(tmp_path, "[profile]\nc = 5\n[run]\nn_samples = 100\n")
    assert main(["mixture", "--config", cfg, "--out", str(tmp_path)]) == 1
    assert "1/K1" in capsys.readouterr().err


def test_simulate_and_classify(tmp_path):
    cfg = _write(tmp_path, "[run]\nt_grid = 0, 2\nn_samples = 2000\n")
    out = str(tmp_path / "o")
    assert main(["simulate", "--config", cfg, "--out", out]) == 0
    rows = _rows(os.path.join(out, "simulate.csv"))
    assert [r["t"] for r in rows] == ["0.0", "2.0"] and rows[0]["m"] == "1"
    assert main(["classify", "--config", os.path.join(CONFIGS, "cauchy.ini"), "--out", out]) == 0
    row = _rows(os.path.join(out, "classify.csv"))[0]
    assert row["kind"] == "NDA" and abs(float(row["a0"]) - 1.0) < 1e-6


def test_solve_cauchy(tmp_path):
    cfg = _write(tmp_path, "[law]\nkind = cauchy\n[run]\nt_grid = 0, 1\nn_xi = 257\ncf_samples = 500\n")
    out = str(tmp_path / "o")
    assert main(["solve", "--config", cfg, "--out", out]) == 0
    rows = _rows(os.path.join(out, "solve.csv"))
    assert all(float(r["limit_distance"]) < 1e-8 and float(r["trees_distance"]) < 1e-8 for r in rows)


def test_bounds_and_mixture(tmp_path):
    cfg = _write(tmp_path, "[run]\nt_grid = 4, 8\nn_samples = 5000\nmixture_m = 3\n")
    out = str(tmp_path / "o")
    assert main(["bounds", "--config", cfg, "--out", out]) == 0
    for name in ("constants.csv", "step3.csv", "megabound.csv", "rates.csv"):
        assert os.path.exists(os.path.join(out, name))
    assert main(["mixture", "--config", cfg, "--out", out]) == 0
    row = _rows(os.path.join(out, "mixture.csv"))[0]
    assert float(row["K1"]) == pytest.approx(4 / 3)


def test_bounds_needs_p_positive(tmp_path):
    cfg = _write(tmp_path, "[model]\np = 0\n[law]\nkind = gaussian\n")
    assert main(["bounds", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_threads_do_not_change_output(tmp_path):
    cfg = _write(tmp_path, "[run]\nt_grid = 0, 3\nn_samples = 3000\nchunk_size = 500\n")
    blobs = []
    for k in (1, 3):
        out = str(tmp_path / f"o{k}")
        assert main(["simulate", "--config", cfg, "--threads", str(k), "--out", out]) == 0
        blobs.append(open(os.path.join(out, "simulate.csv"), "rb").read())
    assert blobs[0] == blobs[1]
