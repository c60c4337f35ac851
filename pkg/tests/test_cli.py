import csv
import io
import json
import math
import subprocess
import sys

import pytest

from cpapprox.cli import RunConfig, main, run


def call(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_pmf_example(capsys):
    code, out, _ = call(capsys, "pmf", "--model", "k_runs", "--k", "2", "--n", "3", "--p", "0.5")
    assert code == 0
    assert json.loads(out)["pmf"] == [0.5, 0.3125, 0.125, 0.0625]


def test_module_entry_point():
    res = subprocess.run(
        [sys.executable, "-m", "cpapprox", "pmf", "--model", "k_runs", "--k", "1", "--n", "2", "--p", "0.5"],
        capture_output=True, text=True, check=True,
    )
    assert json.loads(res.stdout)["pmf"] == [0.25, 0.5, 0.25]


def test_distance_self(capsys):
    code, out, _ = call(capsys, "distance", "--model", "cp2", "--n", "20", "--p", "0.2", "--pbar", "0.1",
                        "--against", "self", "--h", "0.5")
    rep = json.loads(out)
    assert code == 0
    assert rep["dist_tv"] == 0 and rep["dist_wtv"] == 0 and rep["dist_wass"] == 0


def test_distance_against_model(capsys):
    target = json.dumps({"type": "k_runs", "k": 1, "n": 2, "p": 0.5})
    code, out, _ = call(capsys, "distance", "--model", "k_runs", "--k", "1", "--n", "2", "--p", "0.5",
                        "--against", "model", "--target-json", target)
    assert code == 0 and json.loads(out)["dist_tv"] == 0


def test_distance_cp(capsys):
    code, out, _ = call(capsys, "distance", "--model", "k_runs", "--k", "1", "--n", "1", "--p", "0.1",
                        "--lambda", "0.1", "--h", "0.25")
    rep = json.loads(out)
    assert code == 0 and rep["wass_inequality_holds"]
    assert rep["dist_tv"] > 0


def test_converge_decreasing_and_deterministic(capsys):
    argv = ("converge", "--model", "kk_events", "--k1", "1", "--k2", "1", "--lambda", "2", "--h", "0.25",
            "--grid", "100,400,1600")
    code, first, _ = call(capsys, *argv)
    _, second, _ = call(capsys, *argv)
    assert code == 0 and first == second
    rows = json.loads(first)["rows"]
    d = [r["dist_wtv"] for r in rows]
    assert d[0] > d[1] > d[2]
    assert [r["n"] for r in rows] == [100, 400, 1600]


def test_csv_matches_json(capsys):
    argv = ["converge", "--model", "cp2", "--lambda", "1,0.5", "--grid", "50,100"]
    _, js, _ = call(capsys, *argv)
    _, cs, _ = call(capsys, *argv, "--format", "csv")
    rows = json.loads(js)["rows"]
    parsed = list(csv.DictReader(io.StringIO(cs)))
    assert list(parsed[0]) == [
        "n", "p", "gamma1", "gamma2", "nu1_max", "dist_wtv", "dist_wass", "bound_total", "term_moment_match",
        "term_nu_s1", "term_nu1_sq", "term_cov", "precondition_ok", "cond3", "cond4_m1", "cond4_m2", "cond5",
        "cond6", "pbar",
    ]
    for j, c in zip(rows, parsed):
        for key, val in j.items():
            if isinstance(val, bool):
                assert c[key] == ("true" if val else "false")
            elif isinstance(val, float):
                assert float(c[key]) == val
            else:
                assert c[key] == str(val)


def test_fixed_p(capsys):
    code, out, _ = call(capsys, "converge", "--model", "k_runs", "--k", "2", "--p", "0.1", "--lambda", "1",
                        "--grid", "10,20")
    rep = json.loads(out)
    assert code == 0 and rep["calibration"] == "fixed-p"
    assert [r["p"] for r in rep["rows"]] == [0.1, 0.1]


def test_bound_and_corollary(capsys):
    code, out, _ = call(capsys, "bound", "--model", "cp2", "--n", "400", "--p", "0.05", "--pbar", "0.00125",
                        "--lambda", "1,0.5", "--corollary", "--h", "0.1")
    rep = json.loads(out)["report"]
    assert code == 0
    assert rep["form"] == "corollary-s2" and rep["dominated"]
    assert rep["wasserstein_bound"] == pytest.approx(rep["total"] / math.expm1(0.1))
    assert "corollary_gap_m2" in rep


def test_heinrich_check(capsys):
    code, out, _ = call(capsys, "heinrich-check", "--model", "k_runs", "--k", "2", "--n", "8", "--p", "0.01",
                        "--lambda", "0.0008", "--h", "0.25")
    points = json.loads(out)["points"]
    assert code == 0 and len(points) == 5
    assert all(p["in_region"] and p["lemmas_hold"] and p["product_rel_err"] < 1e-10 for p in points)


def test_presman_check(capsys):
    code, out, _ = call(capsys, "presman-check", "--model", "k_runs", "--k", "2", "--n", "30", "--p", "0.1",
                        "--lambda", "0.3")
    rep = json.loads(out)
    assert code == 0 and rep["holds"] and rep["rhs_doubling_change"] <= 1e-9


def test_simulate(capsys):
    argv = ("simulate", "--model", "k_runs", "--k", "2", "--n", "50", "--p", "0.2", "--seed", "7", "--reps", "20000")
    _, a, _ = call(capsys, *argv)
    _, b, _ = call(capsys, *argv)
    rep = json.loads(a)
    assert a == b
    assert "PCG64" in rep["rng"] and rep["tv_to_exact"] < 3 / math.sqrt(20000) + 0.005


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"model": {"type": "k_runs", "k": 2}, "lambdas": [1.0], "grid": [50, 100]}))
    code, out, _ = call(capsys, "converge", "--config", str(cfg), "--h", "0.25")
    rep = json.loads(out)
    assert code == 0 and rep["h"] == 0.25 and len(rep["rows"]) == 2


@pytest.mark.parametrize(
    "argv,message",
    [
        (["converge", "--model", "k_runs", "--k", "2", "--lambda", "1", "--grid", "10,20", "--h", "-1"], "invalid h"),
        (["converge", "--model", "k_runs", "--k", "2", "--lambda", "-1", "--grid", "10,20"], "invalid lambdas"),
        (["converge", "--model", "k_runs", "--k", "2", "--lambda", "1", "--s", "0", "--grid", "10"], "invalid s"),
        (["converge", "--model", "k_runs", "--k", "2", "--lambda", "1", "--grid", ","], "invalid grid"),
        (["converge", "--model", "k_runs", "--k", "2", "--lambda", "1", "--grid", "20,10"], "invalid grid"),
        (["converge", "--model", "k_runs", "--k", "2", "--lambda", "50", "--grid", "10"], "infeasible"),
        (["pmf", "--model-json", '{"type": "weird"}'], "unknown model"),
        (["pmf", "--model-json", "{not json"], "malformed JSON"),
        (["pmf", "--model", "k_runs", "--k", "2"], "missing"),
    ],
)
def test_validation(capsys, argv, message):
    code, out, err = call(capsys, *argv)
    assert code == 2 and out == ""
    assert message in err


def test_resource_error(capsys):
    code, _, err = call(capsys, "pmf", "--model", "k_runs", "--k", "2", "--n", "20000000", "--p", "0.1")
    assert code == 3 and "budget" in err


def test_run_api():
    code, text = run(RunConfig("pmf", model={"type": "k_runs", "k": 2, "n": 3, "p": 0.5}, format="csv"))
    assert code == 0
    assert text.splitlines() == ["k,prob", "0,0.5", "1,0.3125", "2,0.125", "3,0.0625"]
