import json
import subprocess
import sys

import numpy as np
import pytest

from modal_sdr.cli import main
from modal_sdr.pipeline import write_csv
from modal_sdr import Dataset

SIM = ["simulate", "--models", "A1", "--dists", "normal", "--n-list", "200",
       "--methods", "lmopg", "--reps", "5", "--seed", "7"]


@pytest.fixture
def toy(tmp_path):
    path = tmp_path / "toy.csv"
    path.write_text("x,y\n1.0,2.0\n2.0,3.5\n4.0,4.0\n")
    return path


@pytest.fixture
def index_csv(tmp_path):
    rng = np.random.default_rng(4)
    X = rng.standard_normal((600, 4))
    y = 2 * (X[:, 0] - X[:, 2]) + 1 + 0.05 * rng.standard_normal(600)
    path = tmp_path / "index.csv"
    write_csv(path, Dataset(X, y), names=["a", "b", "c", "d"], response_name="resp")
    return path


def test_simulate_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(SIM + ["--out", str(a)]) == 0
    assert main(SIM + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().startswith("model,dist,n,method,avg_R,sd_R,reps,failures\nA1,Normal,200,lmopg,")


def test_simulate_structured(capsys):
    assert main(SIM[:-4] + ["--reps", "1", "--methods", "sir", "--format", "structured"]) == 0
    rec = json.loads(capsys.readouterr().out.strip())
    assert rec["method"] == "sir" and rec["reps"] == 1 and rec["model"] == "A1"


def test_estimate_toy(toy, capsys):
    assert main(["estimate", "--input", str(toy), "--response", "y", "--d", "1"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert len(out["basis"]) == 1
    assert np.linalg.norm(out["basis"][0]) == pytest.approx(1, abs=1e-12)
    assert out["eigen_proportions"] == [1.0]
    assert out["diagnostics"]["failed_anchors"] == 0


@pytest.mark.parametrize("method", ["lmopg", "meanopg", "sir"])
def test_estimate_methods(index_csv, tmp_path, method):
    out = tmp_path / "est.json"
    assert main(["estimate", "--input", str(index_csv), "--response", "resp",
                 "--method", method, "--out", str(out)]) == 0
    res = json.loads(out.read_text())
    v = np.array(res["basis"][0])
    assert abs(v @ np.array([1, 0, -1, 0])) / np.sqrt(2) >= 0.99


def test_pipeline_command(index_csv, capsys):
    assert main(["pipeline", "--input", str(index_csv), "--response", "resp",
                 "--train-rows", "0:400", "--test-rows", "400:600"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["chosen_d"] == 1 and rep["test_adj_r2"] >= 0.99


def test_unknown_flag(capsys):
    with pytest.raises(SystemExit) as info:
        main(["simulate", "--bogus"])
    assert info.value.code == 2
    assert "unrecognized arguments: --bogus" in capsys.readouterr().err


def test_conflicting_flags(index_csv, capsys):
    with pytest.raises(SystemExit) as info:
        main(["pipeline", "--input", str(index_csv), "--response", "resp", "--train-rows", "0:400",
              "--test-rows", "400:600", "--d", "1", "--cum-prop", "0.9"])
    assert info.value.code == 2
    assert "mutually exclusive" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        main(["estimate", "--input", str(index_csv), "--response", "resp", "--method", "sir", "--h1", "2"])
    assert "conflict with --method sir" in capsys.readouterr().err


def test_unreadable_path(tmp_path, capsys):
    code = main(["estimate", "--input", str(tmp_path / "missing.csv"), "--response", "y"])
    assert code == 3
    assert "ingest failed: cannot read" in capsys.readouterr().err


def test_missing_column_names_stage(toy, capsys):
    assert main(["estimate", "--input", str(toy), "--response", "TEY"]) == 1
    assert "ingest failed" in capsys.readouterr().err


def test_estimation_failure_names_stage(tmp_path, capsys):
    path = tmp_path / "flat.csv"
    path.write_text("x,y\n1,5\n2,5\n3,5\n")
    assert main(["estimate", "--input", str(path), "--response", "y"]) == 1
    assert "estimate failed" in capsys.readouterr().err


def test_unwritable_output(toy, tmp_path, capsys):
    code = main(["estimate", "--input", str(toy), "--response", "y", "--out", str(tmp_path / "no" / "x.json")])
    assert code == 3
    assert "write failed" in capsys.readouterr().err


def test_module_entry_point(toy):
    res = subprocess.run([sys.executable, "-m", "modal_sdr", "estimate", "--input", str(toy),
                          "--response", "y"], capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["d"] == 1
