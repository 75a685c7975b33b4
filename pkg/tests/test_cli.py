import csv
import json
import os

import numpy as np

from ecca.cli import main
from ecca.io import load_matrix_csv, save_matrix_csv
from ecca.model import load_model


def run(args):
    return main([str(a) for a in args])


def test_simulate_writes_replicates(tmp_path):
    out = tmp_path / "sims"
    assert run(["simulate", "--setting", 1, "--reps", 2, "--seed", 5,
                "--out", out]) == 0
    for rep in (0, 1):
        rep_dir = out / f"rep_{rep}"
        x1 = load_matrix_csv(rep_dir / "x1.csv")
        assert x1.shape == (50, 30)
        truth = load_model(rep_dir / "truth.json")
        from ecca.model import constraint_residuals
        assert constraint_residuals(truth).max() <= 1e-10
        scn = json.loads((rep_dir / "scenario.json").read_text())
        assert scn["r0"] == 3
    assert not (out / "rep_2").exists()


def test_simulate_zero_reps(tmp_path):
    out = tmp_path / "none"
    assert run(["simulate", "--setting", 1, "--reps", 0, "--out", out]) == 0
    assert os.listdir(out) == []


def test_fit_roundtrip_and_exit_codes(tmp_path):
    out = tmp_path / "sims"
    run(["simulate", "--setting", 1, "--reps", 1, "--seed", 1, "--out", out])
    rep = out / "rep_0"
    fit_dir = tmp_path / "fit"
    code = run(["fit", "--x1", rep / "x1.csv", "--x2", rep / "x2.csv",
                "--family1", "gaussian", "--family2", "gaussian",
                "--ranks", "3,7,6", "--out", fit_dir])
    assert code == 0
    model = load_model(fit_dir / "model.json")
    assert model.r0 == 3 and model.r1 == 7 and model.r2 == 6
    with open(fit_dir / "trace.csv") as fh:
        rows = list(csv.DictReader(fh))
    nll = [float(r["nll_total"]) for r in rows[1:]]
    assert nll[-1] <= float(rows[0]["nll_total"])
    assert all(b <= a + 1e-10 for a, b in zip(nll, nll[1:]))


def test_fit_exit_two_on_tmax(tmp_path):
    out = tmp_path / "sims"
    run(["simulate", "--setting", 2, "--reps", 1, "--seed", 2, "--out", out])
    rep = out / "rep_0"
    fit_dir = tmp_path / "fit"
    code = run(["fit", "--x1", rep / "x1.csv", "--x2", rep / "x2.csv",
                "--family1", "gaussian", "--family2", "binomial:100",
                "--ranks", "3,7,6", "--t-max", 2, "--eps", "1e-12",
                "--out", fit_dir])
    assert code == 2
    assert (fit_dir / "model.json").exists()


def test_fit_malformed_csv_names_row(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("1.0,2.0\n3.0\n")
    ok = tmp_path / "ok.csv"
    save_matrix_csv(np.zeros((2, 2)), ok)
    code = run(["fit", "--x1", bad, "--x2", ok, "--family1", "gaussian",
                "--family2", "gaussian", "--ranks", "0,1,1",
                "--out", tmp_path / "f"])
    assert code == 1
    assert "row 2" in capsys.readouterr().err


def test_fit_invalid_family(tmp_path, capsys):
    ok = tmp_path / "ok.csv"
    save_matrix_csv(np.zeros((3, 2)), ok)
    code = run(["fit", "--x1", ok, "--x2", ok, "--family1", "poisson",
                "--family2", "gaussian", "--ranks", "0,1,1",
                "--out", tmp_path / "f"])
    assert code == 1
    assert "family" in capsys.readouterr().err


def test_rank_command(tmp_path):
    rng = np.random.default_rng(0)
    s = rng.standard_normal((25, 2))
    x1 = s @ (rng.standard_normal((8, 2)) * 3).T + rng.standard_normal(8)
    x2 = s @ (rng.standard_normal((6, 2)) * 3).T + rng.standard_normal(6)
    save_matrix_csv(x1, tmp_path / "x1.csv")
    save_matrix_csv(x2, tmp_path / "x2.csv")
    out = tmp_path / "rank"
    assert run(["rank", "--x1", tmp_path / "x1.csv", "--x2", tmp_path / "x2.csv",
                "--family1", "gaussian", "--family2", "gaussian",
                "--grid", "1:4", "--folds", 5, "--out", out]) == 0
    doc = json.loads((out / "rank.json").read_text())
    assert doc["r1"] == 2 and doc["r2"] == 2
    assert len(doc["angles_deg"]) == 2
    assert doc["r0"] == 2  # shared scores: tiny angles


def test_rank_binomial_with_zeros(tmp_path):
    # exact zeros and ones go through the boundary adjustment
    rng = np.random.default_rng(2)
    s = rng.standard_normal((25, 2))
    theta = rng.standard_normal(10) * 50 + s @ (rng.standard_normal((10, 2)) * 120).T
    x = rng.binomial(20, 1 / (1 + np.exp(-theta / 20))) / 20.0
    assert (x == 0).any() or (x == 1).any()
    save_matrix_csv(x, tmp_path / "x.csv")
    out = tmp_path / "rank"
    assert run(["rank", "--x1", tmp_path / "x.csv", "--x2", tmp_path / "x.csv",
                "--family1", "binomial:20", "--family2", "binomial:20",
                "--grid", "1:3", "--folds", 5, "--out", out]) == 0
    doc = json.loads((out / "rank.json").read_text())
    assert doc["r1"] in (1, 2, 3)


def test_rank_singleton_grid(tmp_path):
    rng = np.random.default_rng(1)
    x = rng.standard_normal((20, 6))
    save_matrix_csv(x, tmp_path / "x.csv")
    out = tmp_path / "rank"
    assert run(["rank", "--x1", tmp_path / "x.csv", "--x2", tmp_path / "x.csv",
                "--family1", "gaussian", "--family2", "gaussian",
                "--grid", "3", "--folds", 4, "--out", out]) == 0
    doc = json.loads((out / "rank.json").read_text())
    assert doc["r1"] == 3 and doc["r2"] == 3
    assert list(doc["curves"]["1"]) == ["3"]


def test_evaluate_appends_rows(tmp_path):
    out = tmp_path / "sims"
    run(["simulate", "--setting", 1, "--reps", 1, "--seed", 3, "--out", out])
    rep = out / "rep_0"
    fit_dir = tmp_path / "fit"
    run(["fit", "--x1", rep / "x1.csv", "--x2", rep / "x2.csv",
         "--family1", "gaussian", "--family2", "gaussian",
         "--ranks", "3,7,6", "--out", fit_dir])
    results = tmp_path / "eval.csv"
    assert run(["evaluate", "--model", fit_dir / "model.json",
                "--truth", rep / "truth.json", "--setting", 1, "--rep", 0,
                "--out", results]) == 0
    with open(results) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2
    assert {r["view"] for r in rows} == {"1", "2"}
    assert all(float(r["relative_error"]) < 1.0 for r in rows)


def test_bench_counts_and_determinism(tmp_path):
    args = ["bench", "--setting", "1", "--reps", 2, "--seed", 11]
    assert run(args + ["--out", tmp_path / "a"]) == 0
    assert run(args + ["--out", tmp_path / "b"]) == 0
    a = (tmp_path / "a" / "results.csv").read_bytes()
    b = (tmp_path / "b" / "results.csv").read_bytes()
    assert a == b
    with open(tmp_path / "a" / "results.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4  # 2 reps x 2 views
    assert [r["status"] for r in rows] == ["ok"] * 4
    assert all(r["seconds"] == "0.0" for r in rows)
    order = [(r["setting"], int(r["rep"]), int(r["view"])) for r in rows]
    assert order == sorted(order)


def test_csv_roundtrip_exact(tmp_path, rng):
    m = rng.standard_normal((7, 5)) * np.pi
    path = tmp_path / "m.csv"
    save_matrix_csv(m, path)
    back = load_matrix_csv(path)
    assert np.array_equal(back, m)
