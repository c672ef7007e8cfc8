import csv
import json

import numpy as np
import pytest

from epsrank.cli import main
from epsrank.matio import read_matrix, write_matrix


@pytest.fixture
def work(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    for key in list(__import__("os").environ):
        if key.startswith("NLR_"):
            monkeypatch.delenv(key)
    return tmp_path


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_gen_and_svd(work, capsys):
    assert run(capsys, "gen", "--m", "80", "--n", "60", "--r", "6", "--out", "a.nlrm")[0] == 0
    meta = json.loads((work / "a.jsonl").read_text())
    assert meta["r"] == 6 and len(meta["spectrum"]) == 60
    code, out, _ = run(capsys, "svd", "--in", "a.nlrm", "--eps", "1e-10", "--block", "4",
                       "--out-prefix", "f", "--trace", "t.csv")
    assert code == 0 and json.loads(out)["k"] == 6
    assert read_matrix("f_U.nlrm").shape == (80, 6)
    rows = list(csv.reader(open("t.csv")))
    assert rows[0] == ["block_index", "position", "magnitude"]


def test_inv(work, capsys):
    write_matrix("a.nlrm", np.random.default_rng(0).standard_normal((20, 3)) @
                 np.random.default_rng(1).standard_normal((3, 15)))
    code, out, _ = run(capsys, "inv", "--in", "a.nlrm", "--side", "right", "--lambda", "2",
                       "--eps", "1e-10", "--block", "4", "--out-prefix", "p",
                       "--materialize", "m.nlrm")
    assert code == 0 and json.loads(out)["k"] == 3
    A = read_matrix("a.nlrm")
    M = read_matrix("m.nlrm")
    assert np.allclose(M, np.linalg.inv(2 * np.eye(15) + A.T @ A), atol=1e-12)


def test_denoise(work, capsys):
    assert run(capsys, "gen", "--family", "stack", "--height", "16", "--width", "12",
               "--frames", "20", "--r", "3", "--noise", "2", "--out", "s.nlrm")[0] == 0
    code, _, _ = run(capsys, "denoise", "--in-stack", "s.nlrm", "--out-stack", "d.nlrm",
                     "--report", "r.json")
    assert code == 0
    rep = json.loads((work / "r.json").read_text())
    assert set(rep) == {"mse", "psnr_db", "epi", "k", "er", "wall_seconds"}


def test_ridge(work, capsys):
    assert run(capsys, "gen", "--family", "multicollinear", "--m", "100", "--n", "40",
               "--r", "10", "--out", "x.nlrm")[0] == 0
    code, out, _ = run(capsys, "ridge", "--x", "x.nlrm", "--y", "x_y.nlrm", "--eps", "1e-6",
                       "--compare-dense", "--out", "beta.nlrm")
    res = json.loads(out)
    assert code == 0 and res["lambda"] > 0
    assert res["prediction_mse"] == pytest.approx(res["dense_prediction_mse"], rel=1e-6)
    assert read_matrix("beta.nlrm").shape == (40, 1)


def test_bench(work, capsys):
    (work / "c.ini").write_text("[a]\nm = 40\nn = 30\nr = 3\neps = 1e-6\n"
                                "methods = GRSVD, dense-SVD\n")
    code, out, _ = run(capsys, "bench", "--config", "c.ini", "--out", "o.csv",
                       "--aggregate", "g.csv")
    assert code == 0 and "2 records" in out
    assert len(list(csv.reader(open("o.csv")))) == 3


def test_exit_codes(work, capsys):
    assert run(capsys, "svd", "--in", "a.nlrm")[0] == 2
    assert run(capsys, "nope")[0] == 2
    assert run(capsys, "svd", "--in", "missing.nlrm", "--out-prefix", "f")[0] == 2
    (work / "bad.nlrm").write_bytes(b"garbage")
    code, _, err = run(capsys, "svd", "--in", "bad.nlrm", "--out-prefix", "f")
    assert code == 3 and "format error" in err
    write_matrix("a.nlrm", np.eye(5))
    assert run(capsys, "svd", "--in", "a.nlrm", "--eps", "2", "--out-prefix", "f")[0] == 2
    (work / "c.ini").write_text("[a]\nm = 40\nn = x\n")
    code, _, err = run(capsys, "bench", "--config", "c.ini", "--out", "o.csv")
    assert code == 2 and "line 3" in err and "'n'" in err


def test_numerical_failure_code(work, capsys):
    # a zero response gives an all-zero pilot, for which HKB is undefined
    write_matrix("x.nlrm", np.random.default_rng(0).standard_normal((10, 4)))
    write_matrix("y.nlrm", np.zeros((10, 1)))
    assert run(capsys, "ridge", "--x", "x.nlrm", "--y", "y.nlrm", "--pilot", "dense")[0] == 4


def test_env_defaults(work, capsys, monkeypatch):
    write_matrix("a.nlrm", np.diag([3.0, 2.0, 1e-4, 0, 0, 0]))
    monkeypatch.setenv("NLR_EPS", "0.5")
    monkeypatch.setenv("NLR_OUT_PREFIX", "envf")
    monkeypatch.setenv("NLR_BLOCK", "2")
    code, out, _ = run(capsys, "svd", "--in", "a.nlrm")
    assert code == 0 and (work / "envf_manifest.json").exists()
    k_env = json.loads(out)["k"]
    code, out, _ = run(capsys, "svd", "--in", "a.nlrm", "--eps", "1e-12")
    assert json.loads(out)["k"] == 3 and k_env <= 2
