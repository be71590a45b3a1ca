import csv
import json

import pytest

from robust_snell import fixtures, solve
from robust_snell.cli import CSV_COLUMNS, run


def run_command(tmp_path, command, config_path, name="out"):
    outdir = tmp_path / name
    code = run([command, "--config", str(config_path), "--out", str(outdir)])
    return code, outdir


def read_summary(outdir):
    return json.loads((outdir / "summary.json").read_text())


def read_nodes(outdir):
    with open(outdir / "nodes.csv", newline="") as fh:
        return list(csv.DictReader(fh))


def write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return path


CRR_CONFIG = {
    "crr": {
        "S0": 4.0,
        "up": 2.0,
        "down": 0.5,
        "steps": 2,
        "rate": 0.0,
        "K": 5.0,
        "H": 4.0,
        "q_up": 0.5,
        "ambiguity": [0.25, 0.75],
    }
}


class TestSolveCommand:
    def test_tt1_summary(self, tmp_path):
        code, outdir = run_command(tmp_path, "solve", fixtures.config_path("tt1"))
        assert code == 0
        summary = read_summary(outdir)
        assert summary["R_root"] == 1.5
        assert summary["U_star_stops"] == ["u", "d"]
        assert summary["certificate"]["optimal"] is True

    def test_nodes_csv_schema(self, tmp_path):
        _, outdir = run_command(tmp_path, "solve", fixtures.config_path("tt4"))
        with open(outdir / "nodes.csv", newline="") as fh:
            header = next(csv.reader(fh))
        assert header == CSV_COLUMNS

    def test_nodes_csv_values(self, tmp_path):
        _, outdir = run_command(tmp_path, "solve", fixtures.config_path("tt4"))
        rows = {row["node_id"]: row for row in read_nodes(outdir)}
        assert rows["r"]["R"] == "2.625"
        assert rows["d"]["R_plus"] == "3.25"
        assert rows["d"]["stop"] == "0"
        assert rows["dd"]["stop"] == "1"
        assert rows["dd"]["u_star_stop"] == "1"
        assert rows["r"]["argmax_extreme"] == "0"
        assert rows["r"]["q"] == ""
        assert rows["u"]["q"] == "0.5"
        assert rows["r"]["M"] == ""

    def test_floats_round_trip_exactly(self, tmp_path, tt3):
        code, outdir = run_command(tmp_path, "solve", fixtures.config_path("tt3"))
        assert code == 0
        summary = read_summary(outdir)
        sol = solve(tt3.tree, tt3.payoff, tt3.priors)
        assert summary["R_root"] == sol.R["r"]


class TestOracleCommand:
    def test_tt4_deviation(self, tmp_path):
        code, outdir = run_command(tmp_path, "oracle", fixtures.config_path("tt4"))
        assert code == 0
        summary = read_summary(outdir)
        assert summary["max_deviation"] < 1e-9
        assert summary["nodes_checked"] == 7


class TestDecomposeCommand:
    def test_tt3_diagnostics(self, tmp_path):
        code, outdir = run_command(tmp_path, "decompose", fixtures.config_path("tt3"))
        assert code == 0
        summary = read_summary(outdir)
        assert summary["C_increasing"] is False
        assert summary["min_delta_C"] == pytest.approx(-0.2, abs=1e-12)
        assert summary["scaling_closed"] is False
        rows = {row["node_id"]: row for row in read_nodes(outdir)}
        assert float(rows["a"]["C"]) == pytest.approx(-0.2, abs=1e-12)
        assert rows["a"]["A_q"] != ""


class TestPriceCommand:
    def test_crr_reproduces_fixture_value(self, tmp_path):
        config = write_config(tmp_path, CRR_CONFIG)
        code, outdir = run_command(tmp_path, "price", config)
        assert code == 0
        summary = read_summary(outdir)
        assert summary["H_S"] == 2.625
        assert summary["exercise_boundary"] == ["uu", "ud", "du", "dd"]
        assert summary["optimal_prior_summary"] == {"r": 0.25, "u": 0.25, "d": 0.25}
        rows = {row["node_id"]: row for row in read_nodes(outdir)}
        assert rows["dd"]["state_S"] == "1"
        assert rows["dd"]["state_hit"] == "1"

    def test_price_requires_crr_block(self, tmp_path):
        code, _ = run_command(tmp_path, "price", fixtures.config_path("tt1"))
        assert code == 2


class TestDeterminism:
    @pytest.mark.parametrize(
        "command,fixture", [("solve", "tt1"), ("solve", "tt4"), ("oracle", "tt4"), ("decompose", "tt3")]
    )
    def test_repeat_runs_are_byte_identical(self, tmp_path, command, fixture):
        config = fixtures.config_path(fixture)
        _, out1 = run_command(tmp_path, command, config, "first")
        _, out2 = run_command(tmp_path, command, config, "second")
        assert (out1 / "summary.json").read_bytes() == (out2 / "summary.json").read_bytes()
        assert (out1 / "nodes.csv").read_bytes() == (out2 / "nodes.csv").read_bytes()

    def test_price_runs_are_byte_identical(self, tmp_path):
        config = write_config(tmp_path, CRR_CONFIG)
        _, out1 = run_command(tmp_path, "price", config, "first")
        _, out2 = run_command(tmp_path, "price", config, "second")
        assert (out1 / "summary.json").read_bytes() == (out2 / "summary.json").read_bytes()
        assert (out1 / "nodes.csv").read_bytes() == (out2 / "nodes.csv").read_bytes()


class TestExitCodes:
    def test_invalid_probability_sum(self, tmp_path, capsys):
        config = write_config(
            tmp_path,
            {
                "tree": {
                    "horizon": 1,
                    "nodes": [
                        {"id": "r", "time": 0, "Y": 1.0},
                        {"id": "u", "time": 1, "parent": "r", "q": 0.5, "Y": 2.0},
                        {"id": "d", "time": 1, "parent": "r", "q": 0.4, "Y": 0.0},
                    ],
                },
                "priors": {"node_extremes": {"r": [[1.5, 0.5]]}},
            },
        )
        code, _ = run_command(tmp_path, "solve", config)
        assert code == 2
        assert "probabilities sum 0.9" in capsys.readouterr().err

    def test_both_model_blocks(self, tmp_path):
        payload = dict(CRR_CONFIG)
        payload["tree"] = {"horizon": 1, "nodes": []}
        code, _ = run_command(tmp_path, "solve", write_config(tmp_path, payload))
        assert code == 2

    def test_missing_payoff(self, tmp_path):
        config = write_config(
            tmp_path,
            {
                "tree": {
                    "horizon": 1,
                    "nodes": [
                        {"id": "r", "time": 0},
                        {"id": "u", "time": 1, "parent": "r", "q": 1.0},
                    ],
                },
                "priors": {"node_extremes": {"r": [[1.0]]}},
            },
        )
        code, _ = run_command(tmp_path, "solve", config)
        assert code == 2

    def test_bad_alpha(self, tmp_path):
        config = write_config(
            tmp_path,
            {
                "crr": CRR_CONFIG["crr"],
                "alphas": [0.5, 1.5],
            },
        )
        code, _ = run_command(tmp_path, "solve", config)
        assert code == 2

    def test_size_guard_exit(self, tmp_path):
        payload = {"crr": dict(CRR_CONFIG["crr"])}
        payload["crr"]["steps"] = 6
        code, _ = run_command(tmp_path, "oracle", write_config(tmp_path, payload))
        assert code == 3

    def test_unattained_supremum_exit(self, tmp_path):
        config = write_config(
            tmp_path,
            {
                "tree": {
                    "horizon": 1,
                    "nodes": [
                        {"id": "r", "time": 0, "Y": 1.0},
                        {"id": "u", "time": 1, "parent": "r", "q": 0.5, "Y": 2.0},
                        {"id": "d", "time": 1, "parent": "r", "q": 0.5, "Y": 0.0},
                    ],
                },
                "priors": {"node_extremes": {"r": [[2.0, 0.0], [0.0, 2.0]]}},
                "mode": "equivalent",
            },
        )
        code, _ = run_command(tmp_path, "solve", config)
        assert code == 4

    def test_interval_generator_on_explicit_tree(self, tmp_path):
        config = write_config(
            tmp_path,
            {
                "tree": {
                    "horizon": 1,
                    "nodes": [
                        {"id": "r", "time": 0, "Y": 1.0},
                        {"id": "u", "time": 1, "parent": "r", "q": 0.5, "Y": 2.0},
                        {"id": "d", "time": 1, "parent": "r", "q": 0.5, "Y": 0.0},
                    ],
                },
                "priors": {"interval_up_probability": {"lo": 0.25, "hi": 0.75}},
            },
        )
        code, outdir = run_command(tmp_path, "solve", config)
        assert code == 0
        assert read_summary(outdir)["R_root"] == 1.5
