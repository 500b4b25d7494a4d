import csv
import json
import subprocess
import sys

import pytest

from multicommon import cli
from multicommon.bounds_lab import SuiteReport

AP4 = [[1, 0], [1, 1], [1, 2], [1, 3]]


def _run(tmp_path, config, *extra, name="job"):
    cfg = tmp_path / f"{name}.json"
    cfg.write_text(json.dumps(config))
    out = tmp_path / f"{name}_out"
    code = cli.run([config["command"], "--config", str(cfg), "--out", str(out), "--quiet", *extra])
    report = json.loads((out / "report.json").read_text()) if (out / "report.json").exists() else None
    return code, report, out


def test_analyze_uniform(tmp_path):
    code, rep, _ = _run(tmp_path, {"command": "analyze", "group": {"cyclic": {"p": 5}}, "matrix": AP4, "function": "uniform:0.5"})
    assert code == 0
    res = rep["results"]
    assert res["pair"] == 0.125 and res["threshold"] == 0.125 and res["verdict"] == "at-threshold"
    assert rep["schema_version"] == 1


def test_analyze_inline_table(tmp_path):
    cfg = {"command": "analyze", "group": {"cyclic": {"p": 5}}, "matrix": AP4, "function": [0, 1, 1, 1, 1]}
    code, rep, _ = _run(tmp_path, cfg)
    res = rep["results"]
    assert code == 0 and res["pair_fraction"] == "9/25"
    assert res["parameter_count"] == 25 and res["degenerate_instance_count"] == 5
    assert res["structure"]["four_ap"] == [1, 2, 3, 4]


def test_analyze_three_forms(tmp_path):
    cfg = {"command": "analyze", "group": {"vector": {"p": 5, "n": 1}}, "matrix": AP4[:3], "function": "uniform:0.3"}
    code, rep, _ = _run(tmp_path, cfg)
    assert code == 0 and rep["results"]["structure"]["four_ap"] == "no 4-AP possible (d<4)"


@pytest.mark.parametrize(
    "config",
    [
        {"command": "analyze", "group": {"cyclic": {"p": 5}}, "matrix": AP4, "function": "uniform:0.5", "colour": 1},
        {"command": "analyze", "group": {"cyclic": {"p": 5}}, "matrix": AP4, "function": [0, 1]},
        {"command": "analyze", "group": {"cyclic": {"p": 5}}, "matrix": AP4, "function": "uniform:1.5"},
        {"command": "counterexample", "group": {"vector": {"p": 6, "n": 1}}, "matrix": AP4},
        {"command": "verify"},
    ],
)
def test_config_errors_exit_2(tmp_path, config):
    code, _, _ = _run(tmp_path, config)
    assert code == 2


def test_bad_json_exit_2(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text("{not json")
    assert cli.run(["analyze", "--config", str(cfg), "--out", str(tmp_path), "--quiet"]) == 2


def test_cap_exit_3(tmp_path):
    code, _, _ = _run(tmp_path, {"command": "min-coloring", "group": {"cyclic": {"p": 29}}, "matrix": AP4})
    assert code == 3
    cfg = {"command": "analyze", "group": {"vector": {"p": 5, "n": 3}}, "matrix": AP4, "function": "uniform:0.5", "options": {"cap": 1000}}
    code, _, _ = _run(tmp_path, cfg, name="cap")
    assert code == 3


def test_no_construction_exit_4(tmp_path):
    cfg = {"command": "counterexample", "group": {"vector": {"p": 5, "n": 1}}, "matrix": [[1, 0], [1, 0], [0, 1], [1, 1]]}
    code, _, _ = _run(tmp_path, cfg)
    assert code == 4
    cfg = {"command": "counterexample", "group": {"vector": {"p": 5, "n": 1}}, "matrix": [[1, 0], [0, 1], [1, 1]]}
    code, _, _ = _run(tmp_path, cfg, name="none")
    assert code == 4


def test_violation_exit_5(tmp_path, monkeypatch):
    def fake(*args, **kwargs):
        rep = SuiteReport("splitting")
        rep.record("planted", 2.0, 1.0, {"planted": True})
        return rep

    monkeypatch.setattr(cli, "check_splitting", fake)
    code, rep, _ = _run(tmp_path, {"command": "verify", "options": {"suite": "splitting"}})
    assert code == 5 and rep["results"]["violations"]


def test_min_coloring(tmp_path):
    code, rep, _ = _run(tmp_path, {"command": "min-coloring", "group": {"cyclic": {"p": 5}}, "matrix": AP4})
    assert code == 0 and rep["results"]["min_value"] == "1/5"


def test_proportional_counterexample(tmp_path):
    cfg = {"command": "counterexample", "group": {"vector": {"p": 5, "n": 1}}, "matrix": [[1], [-1]]}
    code, rep, _ = _run(tmp_path, cfg)
    tuning = rep["results"]["tuning"]
    assert code == 0 and tuning["construction"] == "sine"
    assert tuning["alpha"] == pytest.approx(0.25) and tuning["value"] == pytest.approx(0.25, abs=1e-9)
    assert tuning["margin"] == pytest.approx(0.25, abs=1e-9)


def test_counterexample_recipe_round_trip(tmp_path):
    cfg = {
        "command": "counterexample",
        "group": {"vector": {"p": 5, "n": 1}},
        "matrix": AP4,
        "options": {"n": 1, "betas": [0.5, 0.25], "alpha_points": 6},
    }
    code, rep, out = _run(tmp_path, cfg)
    assert code == 0
    value = rep["results"]["tuning"]["value"]
    assert rep["results"]["rounding"]["holds"]
    with open(out / "sweep.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["p", "n", "alpha", "beta", "value", "threshold", "margin"]
    assert len(rows) == 2 * 7
    # re-evaluate the saved recipe by direct enumeration
    again = {
        "command": "analyze",
        "group": {"vector": {"p": 5, "n": 2}},
        "matrix": AP4,
        "function": {"recipe": str(out / "recipe.json")},
    }
    code, rep2, _ = _run(tmp_path, again, name="again")
    assert code == 0 and rep2["results"]["pair"] == pytest.approx(value, abs=1e-12)


def test_counterexample_auto_n_is_uncommon(tmp_path):
    cfg = {"command": "counterexample", "group": {"vector": {"p": 5, "n": 1}}, "matrix": AP4, "options": {"betas": [0.5], "alpha_points": 12}}
    code, rep, _ = _run(tmp_path, cfg)
    res = rep["results"]
    assert code == 0 and res["verdict"].startswith("uncommon")
    assert res["tuning"]["margin"] > 0
    assert "symbolic" in res["rounding"]


def test_determinism(tmp_path):
    cfg = {"command": "verify", "options": {"suite": "cube", "groups": [[3], [2, 2]], "trials": 30}}
    _, _, out1 = _run(tmp_path, cfg, name="a")
    _, _, out2 = _run(tmp_path, cfg, name="b")
    _, _, out3 = _run(tmp_path, cfg, "--threads", "2", name="c")
    first = (out1 / "report.json").read_bytes()
    assert first == (out2 / "report.json").read_bytes() == (out3 / "report.json").read_bytes()
    _, _, out4 = _run(tmp_path, cfg, "--seed", "9", name="d")
    assert first != (out4 / "report.json").read_bytes()


def test_gauss_suite_toggle(tmp_path):
    cfg = {"command": "verify", "options": {"suite": "gauss", "primes": [5], "ns": [1], "exclude_trivial": False}}
    code, rep, _ = _run(tmp_path, cfg)
    assert code == 0 and rep["results"]["excluded"]


def test_entry_point():
    proc = subprocess.run([sys.executable, "-m", "multicommon", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "counterexample" in proc.stdout
