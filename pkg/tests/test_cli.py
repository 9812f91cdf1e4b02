import csv
import json
import subprocess
import sys

import pytest

from accmax.cli import main
from accmax.scenario import save_scenarios, toy_model


@pytest.fixture
def toy_csv(tmp_path):
    path = tmp_path / "toy.csv"
    save_scenarios(toy_model(), path)
    return str(path)


def test_maximize_glr_trace(tmp_path, toy_csv, capsys):
    trace = tmp_path / "trace.csv"
    rc = main(["maximize", "--index", "glr", "--scenario", toy_csv, "--x0", "2", "--eps", "1e-4", "--maxiter", "15",
               "--trace-out", str(trace)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "73.33%" in out and "26.67%" in out
    rows = list(csv.DictReader(trace.open()))
    final = rows[-1]
    assert final["phase"] == "final"
    assert round(float(final["x_L"]), 5) == 3.14282
    assert round(float(final["x_U"]), 5) == 3.14288
    assert [r["sign"] for r in rows if r["phase"] == "1"] == ["-", "+"]


def test_trace_byte_stable(tmp_path, toy_csv):
    outs = []
    for k in range(2):
        path = tmp_path / f"t{k}.csv"
        assert main(["maximize", "--index", "ait", "--scenario", toy_csv, "--trace-out", str(path), "--quiet"]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_evaluate_rounded_weights(toy_csv, capsys):
    assert main(["evaluate", "--index", "glr", "--scenario", toy_csv, "--weights", "0.7333,0.2667", "--quiet"]) == 0
    value = float(capsys.readouterr().out.strip().split()[-1].rstrip(")"))
    assert value == pytest.approx(3.1428, abs=2e-3)


def test_gen_scenarios_deterministic(tmp_path):
    files = []
    for k in range(2):
        path = tmp_path / f"s{k}.csv"
        assert main(["gen-scenarios", "--assets", "10", "--states", "1000", "--seed", "42", "--out", str(path),
                     "--quiet"]) == 0
        files.append(path.read_bytes())
    assert files[0] == files[1]


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    out = tmp_path / "res.json"
    cfg.write_text(json.dumps({"index": "raroc", "eps": 1e-4, "json-out": str(out)}))
    assert main(["maximize", "--config", str(cfg), "--quiet"]) == 0
    res = json.loads(out.read_text())
    assert res["final_interval"][0] == pytest.approx(0.82141, abs=1e-5)
    assert res["epsilon_solution"] == pytest.approx([0.9375, 0.0625], abs=1e-4)


def test_flag_overrides_config(tmp_path):
    cfg = tmp_path / "run.json"
    out = tmp_path / "res.json"
    cfg.write_text(json.dumps({"index": "raroc"}))
    assert main(["maximize", "--config", str(cfg), "--index", "glr", "--json-out", str(out), "--quiet"]) == 0
    assert json.loads(out.read_text())["index"] == "glr"


@pytest.mark.parametrize("argv, code, kind", [
    (["maximize", "--x0", "-1"], 2, "usage"),
    (["maximize", "--scenario", "/nonexistent.csv"], 2, "input"),
    (["minrisk", "--index", "glr"], 2, "usage"),
    (["frontier", "--q", "1.5"], 2, "usage"),
    (["bogus"], 2, "usage"),
])
def test_single_line_errors(argv, code, kind, capsys):
    assert main(argv) == code
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1
    assert err[0].startswith(f"accmax: error: {kind}:")


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"colour": "red"}))
    assert main(["maximize", "--config", str(cfg)]) == 2


def test_frontier_and_dglr(tmp_path, capsys):
    fcsv = tmp_path / "f.csv"
    assert main(["frontier", "--horizon", "2", "--csv-out", str(fcsv), "--quiet"]) == 0
    assert fcsv.read_text().startswith("t,rho,E,is_max_ratio")
    strat = tmp_path / "s.json"
    assert main(["dglr", "--horizon", "2", "--strategy-out", str(strat)]) == 0
    assert "0.10414" in capsys.readouterr().out
    assert "" in json.loads(strat.read_text())


def test_verify_and_simulate(tmp_path, capsys):
    rep = tmp_path / "v.json"
    assert main(["verify-recursive", "--horizon", "2", "--json-out", str(rep), "--quiet"]) == 0
    assert json.loads(rep.read_text())["passed"] is True
    out = tmp_path / "p.csv"
    assert main(["simulate-path", "--horizon", "3", "--csv-out", str(out), "--quiet"]) == 0
    rows = list(csv.DictReader(out.open()))
    assert {r["policy"] for r in rows} == {"consistent", "switching", "myopic"}


def test_tree_and_scenario_exclusive(tmp_path, toy_csv):
    tree = tmp_path / "tree.json"
    tree.write_text(json.dumps({"horizon": 2, "step": toy_model().to_dict()}))
    assert main(["frontier", "--tree", str(tree), "--scenario", toy_csv]) == 2
    assert main(["frontier", "--tree", str(tree), "--quiet"]) == 0


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "accmax.cli", "evaluate", "--weights", "0.5,0.5", "--quiet"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip()
