import csv
import io
import json
import sys
from pathlib import Path

import pytest

from flownas import cli

STUB = Path(__file__).parent / "stub_evaluator.py"


def write_config(tmp_path, name="config.json", **overrides):
    config = {
        "search_space": {
            "wavelets": ["w0", "w1"],
            "activations": ["a0", "a1"],
            "n_blocks": 1,
        },
        "training": {"iterations": 300, "seed": 7},
        "evaluator": {
            "kind": "tabular",
            "table": {
                "w0/a0": 1.0, "w0/a1": 2.0, "w1/a0": 3.0, "w1/a1": 4.0,
            },
        },
        "output_dir": str(tmp_path / "run"),
    }
    config.update(overrides)
    path = tmp_path / name
    path.write_text(json.dumps(config))
    return path


class TestConfigValidation:
    def test_missing_wavelets_is_invalid(self, tmp_path):
        path = write_config(tmp_path, search_space={"activations": ["a0"], "n_blocks": 1})
        assert cli.cmd_train(str(path)) == cli.EXIT_BAD_CONFIG

    def test_unknown_key_rejected(self, tmp_path):
        path = write_config(tmp_path, typo_section={"x": 1})
        assert cli.cmd_train(str(path)) == cli.EXIT_BAD_CONFIG

    def test_incomplete_table_rejected(self, tmp_path):
        path = write_config(tmp_path, evaluator={
            "kind": "tabular", "table": {"w0/a0": 1.0},
        })
        assert cli.cmd_train(str(path)) == cli.EXIT_BAD_CONFIG

    def test_json_syntax_error_is_line_anchored(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text('{\n "search_space": }\n')
        assert cli.cmd_train(str(path)) == cli.EXIT_BAD_CONFIG
        err = capsys.readouterr().err
        assert "line 2" in err

    def test_bad_loss_mode_rejected(self, tmp_path):
        path = write_config(tmp_path, training={"loss_mode": "cubic"})
        assert cli.cmd_train(str(path)) == cli.EXIT_BAD_CONFIG

    def test_defaults_applied(self):
        effective = cli.validate_config({
            "search_space": {"wavelets": ["w0"], "activations": ["a0"], "n_blocks": 1},
            "evaluator": {"kind": "tabular", "table": {"w0/a0": 1.0}},
        })
        assert effective["policy"] == {"hidden_dim": 16, "learning_rate": 1e-3}
        assert effective["training"]["iterations"] == 500
        assert effective["training"]["loss_mode"] == "log_scale"


class TestTrain:
    def test_demo_run_produces_artifacts(self, tmp_path):
        path = write_config(tmp_path)
        assert cli.cmd_train(str(path)) == cli.EXIT_OK
        run = tmp_path / "run"
        for name in ("config_echo.json", "log.jsonl", "checkpoint.json", "summary.json"):
            assert (run / name).exists(), name
        summary = json.loads((run / "summary.json").read_text())
        assert summary["best_architecture"] == "w1/a1"  # max-reward entry
        assert summary["best_reward"] == 4.0
        assert summary["total_trajectories"] == 300
        lines = (run / "log.jsonl").read_text().splitlines()
        assert len(lines) == 300
        first = json.loads(lines[0])
        assert set(first) == {"iteration", "architecture", "reward", "loss", "wall_time"}

    def test_seed_override_reproduces_summary(self, tmp_path):
        path = write_config(tmp_path)
        assert cli.cmd_train(str(path), seed=99) == cli.EXIT_OK
        summary_a = (tmp_path / "run" / "summary.json").read_bytes()
        assert cli.cmd_train(str(path), seed=99) == cli.EXIT_OK
        summary_b = (tmp_path / "run" / "summary.json").read_bytes()
        assert summary_a == summary_b

    def test_external_evaluator_end_to_end(self, tmp_path):
        path = write_config(tmp_path, evaluator={
            "kind": "external",
            "command": [sys.executable, str(STUB)],
            "args": ["normal"],
            "budget": {"epochs": 5},
            "timeout": 60,
        }, training={"iterations": 30, "seed": 1})
        assert cli.cmd_train(str(path)) == cli.EXIT_OK
        summary = json.loads((tmp_path / "run" / "summary.json").read_text())
        assert summary["cache_enabled"] is True
        assert 0 < summary["best_reward"] <= 1.0


class TestSample:
    def test_sample_from_checkpoint(self, tmp_path, capsys):
        path = write_config(tmp_path)
        assert cli.cmd_train(str(path)) == cli.EXIT_OK
        capsys.readouterr()
        ckpt = tmp_path / "run" / "checkpoint.json"
        assert cli.cmd_sample(str(ckpt), 50) == cli.EXIT_OK
        rows = json.loads(capsys.readouterr().out)
        assert sum(r["frequency"] for r in rows) == pytest.approx(1.0)

    def test_corrupt_checkpoint_exit_4(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{")
        assert cli.cmd_sample(str(bad), 10) == cli.EXIT_BAD_ARTIFACT


class TestOracle:
    def test_uniform_rewards_give_equal_probabilities(self, tmp_path, capsys):
        path = write_config(tmp_path, evaluator={
            "kind": "tabular",
            "table": {"w0/a0": 2.0, "w0/a1": 2.0, "w1/a0": 2.0, "w1/a1": 2.0},
        })
        assert cli.cmd_oracle(str(path)) == cli.EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert all(row["exact_probability"] == 0.25 for row in report["terminals"])

    def test_oracle_with_checkpoint_prints_tv(self, tmp_path, capsys):
        path = write_config(tmp_path, training={"iterations": 2000, "seed": 7})
        assert cli.cmd_train(str(path)) == cli.EXIT_OK
        capsys.readouterr()
        ckpt = tmp_path / "run" / "checkpoint.json"
        assert cli.cmd_oracle(str(path), checkpoint_path=str(ckpt)) == cli.EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert 0.0 <= report["tv_distance"] <= 1.0

    def test_cap_exceeded_exit_5(self, tmp_path):
        # 6^4 wavelet/activation pairs over 4 blocks: 1.7M terminals
        path = write_config(tmp_path, search_space={
            "wavelets": [f"w{i}" for i in range(6)],
            "activations": [f"a{i}" for i in range(6)],
            "n_blocks": 4,
        }, evaluator={
            "kind": "synthetic",
            "weights": [[1.0] * 6 for _ in range(8)],
        })
        assert cli.cmd_oracle(str(path)) == cli.EXIT_ORACLE_CAP


class TestReport:
    def test_csv_columns_and_order(self, tmp_path, capsys):
        path = write_config(tmp_path)
        assert cli.cmd_train(str(path)) == cli.EXIT_OK
        capsys.readouterr()
        assert cli.cmd_report(str(tmp_path / "run")) == cli.EXIT_OK
        rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
        assert rows[0] == ["rank", "architecture", "visits", "best_reward", "last_reward"]
        rewards = [float(r[3]) for r in rows[1:]]
        assert rewards == sorted(rewards, reverse=True)

    def test_single_iteration_run_single_row(self, tmp_path, capsys):
        path = write_config(tmp_path, training={"iterations": 1, "seed": 0})
        assert cli.cmd_train(str(path)) == cli.EXIT_OK
        capsys.readouterr()
        assert cli.cmd_report(str(tmp_path / "run")) == cli.EXIT_OK
        rows = [r for r in capsys.readouterr().out.splitlines() if r]
        assert len(rows) == 2  # header + one architecture

    def test_missing_run_dir_exit_4(self, tmp_path):
        assert cli.cmd_report(str(tmp_path / "nope")) == cli.EXIT_BAD_ARTIFACT


class TestMain:
    def test_subcommand_dispatch(self, tmp_path):
        path = write_config(tmp_path, training={"iterations": 5, "seed": 0})
        assert cli.main(["train", "--config", str(path)]) == cli.EXIT_OK
        assert cli.main(["report", "--run", str(tmp_path / "run")]) == cli.EXIT_OK
