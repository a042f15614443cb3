"""Command-line front end: dispatch, output formats and exit codes."""

import csv
import io
import json
import subprocess
import sys

import pytest

from cgmldp import cli

HALF = {"type": "delta", "x": 0.5}
ONE = {"type": "delta", "x": 1.0}
POLY = {"type": "poly", "lo": 1.0, "hi": 2.0, "k": 3}
TWO_POINT = {"type": "discrete", "atoms": [[1.0, 0.5], [2.0, 0.5]]}


def run_cli(tmp_path, command, cfg, *extra):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / "out.txt"
    argv = [command, "--config", str(path), "--output", str(out), *extra]
    status = cli.main(argv)
    text = out.read_text() if out.exists() else ""
    return status, text


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestCommands:
    def test_shape_row(self, tmp_path):
        status, text = run_cli(tmp_path, "shape", {"alpha": HALF, "beta": HALF})
        assert status == 0
        rows = rows_of(text)
        assert list(rows[0]) == cli.COLUMNS["shape"]
        assert float(rows[0]["g"]) == 4.0

    def test_shape_level_set(self, tmp_path):
        status, text = run_cli(tmp_path, "shape", {"alpha": HALF, "beta": HALF,
                                                   "level_set_points": 4})
        rows = rows_of(text)
        assert len(rows) == 5
        # every level-set point has g = 1, i.e. (sqrt(s) + sqrt(t))^2 = 1 for c = 1
        for row in rows:
            s, t = float(row["level_s"]), float(row["level_t"])
            assert abs((s**0.5 + t**0.5) ** 2 - 1.0) < 1e-12

    def test_phase(self, tmp_path):
        status, text = run_cli(tmp_path, "phase", {"alpha": POLY, "beta": ONE,
                                                   "direction": [1, 10]})
        row = rows_of(text)[0]
        assert status == 0
        assert abs(float(row["c1"]) - 0.125) < 1e-12
        assert row["c2"] == "inf" and row["region"] == "LinearA"

    def test_lyapunov_both_kinds(self, tmp_path):
        status, text = run_cli(tmp_path, "lyapunov", {"alpha": HALF, "beta": HALF,
                                                      "lambdas": [0.25, 0.5], "z": 0.0})
        rows = rows_of(text)
        assert status == 0 and len(rows) == 4
        assert {r["kind"] for r in rows} == {"quenched", "annealed"}
        quenched = [r for r in rows if r["kind"] == "quenched"]
        assert abs(float(quenched[0]["stationary_L"]) - 1.0986122886681098) < 1e-14
        # lambda = 0.5 reaches min(a_lo + z, b_lo - z), outside the stationary range
        assert quenched[1]["stationary_L"] == ""

    def test_rate(self, tmp_path):
        status, text = run_cli(tmp_path, "rate", {"alpha": HALF, "beta": HALF, "rs": [3, 8],
                                                  "kinds": "quenched"})
        rows = rows_of(text)
        assert rows[0]["regime"] == "BelowShape"
        assert abs(float(rows[1]["J"]) - 2.1313599014142) < 1e-12

    def test_expand(self, tmp_path):
        status, text = run_cli(tmp_path, "expand", {"alpha": HALF, "beta": HALF,
                                                    "kinds": ["quenched"], "eps": [1e-4, 1e-3]})
        rows = rows_of(text)
        assert status == 0 and len(rows) == 2
        assert abs(float(rows[0]["coefficient"]) - 1 / 3) < 1e-12

    def test_tilt(self, tmp_path):
        status, text = run_cli(tmp_path, "tilt", {"alpha": TWO_POINT, "beta": ONE,
                                                  "direction": [1, 9], "rs": [7.5]})
        row = rows_of(text)[0]
        assert status == 0
        assert float(row["residual"]) <= 1e-6
        assert json.loads(row["nu1"])["type"] == "discrete"

    def test_left_tail(self, tmp_path):
        status, text = run_cli(tmp_path, "left-tail", {
            "alpha": TWO_POINT, "beta": ONE, "direction": [1, 9],
            "intervals": [[5.3, 5.4], [5.4, 5.5]]})
        rows = rows_of(text)
        assert float(rows[0]["bound"]) <= 0.6931471806
        assert rows[1]["bound"] == "inf"

    def test_simulate_with_replicates(self, tmp_path):
        rep_path = tmp_path / "reps.csv"
        status, text = run_cli(tmp_path, "simulate", {
            "alpha": HALF, "beta": HALF, "n": 10, "reps": 5, "seed": 1,
            "lambdas": [0.1], "rs": [3.0], "side": "lower",
            "replicates_output": str(rep_path)})
        rows = rows_of(text)
        assert [r["estimator"] for r in rows] == ["shape", "lyapunov", "tail_lower"]
        reps = rows_of(rep_path.read_text())
        assert len(reps) == 5 and list(reps[0]) == ["replicate", "n", "value"]
        mean = sum(float(r["value"]) for r in reps) / 5
        assert abs(mean - float(rows[0]["value"])) < 1e-12

    def test_burke(self, tmp_path):
        status, text = run_cli(tmp_path, "burke", {"alpha": HALF, "beta": HALF, "z": 0.0,
                                                   "m": 6, "n": 6, "reps": 300, "seed": 2})
        rows = rows_of(text)
        assert status == 0 and len(rows) == 12
        assert {r["series"] for r in rows} == {"I", "J"}

    def test_tasep_positions(self, tmp_path):
        status, text = run_cli(tmp_path, "tasep", {"alpha": HALF, "beta": HALF, "m": 3,
                                                   "n": 10, "seed": 1, "times": [0, 1]})
        rows = rows_of(text)
        assert [int(r["position"]) for r in rows[:3]] == [-1, -2, -3]

    def test_tasep_rate(self, tmp_path):
        status, text = run_cli(tmp_path, "tasep", {"alpha": HALF, "beta": HALF, "query": "rate",
                                                   "x": 1, "y": 1, "t": 20})
        rows = rows_of(text)
        assert list(rows[0]) == ["kind", "x", "y", "t", "rate"]
        assert float(rows[0]["rate"]) > 0

    def test_duality_check(self, tmp_path):
        status, text = run_cli(tmp_path, "duality-check", {
            "alpha": TWO_POINT, "beta": ONE, "direction": [1, 9],
            "lambda_fractions": [0.3, 0.7]})
        rows = rows_of(text)
        assert status == 0 and len(rows) == 4
        assert max(float(r["residual"]) for r in rows) <= 1e-6

    def test_duality_check_inconsistent_exit_3(self, tmp_path, monkeypatch):
        monkeypatch.setattr(cli.rt, "legendre_dual", lambda *a, **k: (123.0, 1.0))
        status, text = run_cli(tmp_path, "duality-check", {
            "alpha": TWO_POINT, "beta": ONE, "lambdas": [0.5]})
        assert status == 3
        assert rows_of(text)[0]["dual"] == "123"


class TestFormats:
    def test_json(self, tmp_path):
        status, text = run_cli(tmp_path, "phase", {"alpha": HALF, "beta": HALF},
                               "--format", "json")
        doc = json.loads(text)
        assert doc["command"] == "phase"
        assert doc["rows"][0]["c2"] == "inf"

    def test_seventeen_digits(self, tmp_path):
        status, text = run_cli(tmp_path, "rate", {"alpha": HALF, "beta": HALF, "rs": [8.0],
                                                  "kinds": "quenched"})
        value = rows_of(text)[0]["J"]
        assert len(value.replace(".", "").lstrip("0")) == 17

    def test_deterministic_output(self, tmp_path):
        cfg = {"alpha": TWO_POINT, "beta": HALF, "n": 12, "reps": 20, "seed": 5,
               "mode": "annealed"}
        _, first = run_cli(tmp_path, "simulate", cfg)
        _, second = run_cli(tmp_path, "simulate", cfg)
        assert first == second

    def test_override_beats_config(self, tmp_path):
        status, text = run_cli(tmp_path, "shape", {"alpha": HALF, "beta": HALF},
                               "--direction", "[4, 1]")
        assert float(rows_of(text)[0]["g"]) == pytest.approx(9.0, rel=1e-14)


class TestExitCodes:
    def test_malformed_law_names_field(self, tmp_path, capsys):
        status, _ = run_cli(tmp_path, "shape", {"alpha": {"type": "delta"}, "beta": HALF})
        assert status == 1
        err = capsys.readouterr().err
        assert "alpha" in err and "'x'" in err

    def test_missing_config_file(self, tmp_path):
        assert cli.main(["shape", "--config", str(tmp_path / "nope.json")]) == 1

    def test_unsorted_grid(self, tmp_path):
        status, _ = run_cli(tmp_path, "rate", {"alpha": HALF, "beta": HALF, "rs": [5, 4]})
        assert status == 1

    def test_domain_error(self, tmp_path):
        status, _ = run_cli(tmp_path, "burke", {"alpha": HALF, "beta": HALF, "z": 0.5,
                                                "m": 3, "n": 3, "reps": 10, "seed": 1})
        assert status == 2

    def test_bad_format(self, tmp_path):
        status, _ = run_cli(tmp_path, "shape", {"alpha": HALF, "beta": HALF, "format": "xml"})
        assert status == 1

    def test_odd_overrides(self, tmp_path):
        status, _ = run_cli(tmp_path, "shape", {"alpha": HALF, "beta": HALF}, "--direction")
        assert status == 1


class TestEntryPoint:
    def test_module_runs(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"alpha": HALF, "beta": HALF}))
        proc = subprocess.run([sys.executable, "-m", "cgmldp.cli", "shape", "--config", str(cfg)],
                              capture_output=True, text=True, check=False)
        assert proc.returncode == 0
        assert proc.stdout.splitlines()[1].startswith("1,1,4,0")
