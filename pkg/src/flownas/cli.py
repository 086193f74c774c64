"""Operator-facing command line: train, sample, oracle, report.

The run configuration is a single JSON document, schema-checked before any
work starts; unknown keys are rejected so typos fail loudly.  Every run
directory is self-describing: the effective config echo, the per-trajectory
JSON-lines log, the final checkpoint, and a summary suffice to re-run and to
audit a search.

Exit codes: 0 success, 2 invalid config, 3 evaluator abort, 4 corrupt
checkpoint or run artifact, 5 oracle enumeration cap exceeded.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, checkpoint, oracle, trainer
from .errors import (
    CheckpointError,
    ConfigError,
    EnumerationTooLargeError,
    FlowNasError,
)
from .evaluators import (
    Budget,
    ExternalEvaluator,
    RewardEvaluator,
    SyntheticEvaluator,
    TabularEvaluator,
)
from .search_space import ArchitectureSpec, SearchSpace, enumerate_terminals, decode

EXIT_OK = 0
EXIT_BAD_CONFIG = 2
EXIT_EVALUATOR_ABORT = 3
EXIT_BAD_ARTIFACT = 4
EXIT_ORACLE_CAP = 5

ORACLE_SAMPLE_COUNT = 10_000
TABLE_COVERAGE_CHECK_LIMIT = 100_000


# ---------------------------------------------------------------------------
# Configuration schema
# ---------------------------------------------------------------------------

def _require(section: dict, key: str, kind, where: str):
    if key not in section:
        raise ConfigError(f"missing required key {key!r}", where)
    value = section[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        raise ConfigError(f"{key!r} has wrong type, expected {kind}", where)
    return value


def _reject_unknown(section: dict, allowed: set[str], where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}", where)


def validate_config(raw: dict) -> dict:
    """Apply defaults and reject malformed or unknown keys.

    Returns the effective configuration used for hashing and echoing.
    """
    if not isinstance(raw, dict):
        raise ConfigError("top-level document must be a JSON object")
    _reject_unknown(
        raw,
        {"search_space", "policy", "training", "evaluator", "output_dir"},
        "config",
    )

    ss = _require(raw, "search_space", dict, "config")
    _reject_unknown(ss, {"wavelets", "activations", "n_blocks"}, "search_space")
    wavelets = _require(ss, "wavelets", list, "search_space")
    activations = _require(ss, "activations", list, "search_space")
    n_blocks = _require(ss, "n_blocks", int, "search_space")
    if not all(isinstance(w, str) for w in wavelets):
        raise ConfigError("wavelets must be strings", "search_space.wavelets")
    if not all(isinstance(a, str) for a in activations):
        raise ConfigError("activations must be strings", "search_space.activations")
    try:
        SearchSpace(tuple(wavelets), tuple(activations), n_blocks)
    except ValueError as exc:
        raise ConfigError(str(exc), "search_space") from exc

    policy = dict(raw.get("policy", {}))
    _reject_unknown(policy, {"hidden_dim", "learning_rate"}, "policy")
    policy.setdefault("hidden_dim", 16)
    policy.setdefault("learning_rate", 1e-3)
    if not isinstance(policy["hidden_dim"], int) or policy["hidden_dim"] < 1:
        raise ConfigError("hidden_dim must be a positive integer", "policy.hidden_dim")
    if not isinstance(policy["learning_rate"], (int, float)) or policy["learning_rate"] <= 0:
        raise ConfigError("learning_rate must be positive", "policy.learning_rate")

    training = dict(raw.get("training", {}))
    _reject_unknown(
        training,
        {"iterations", "loss_mode", "exploration_epsilon", "batch_size",
         "reward_floor", "seed"},
        "training",
    )
    training.setdefault("iterations", 500)
    training.setdefault("loss_mode", "log_scale")
    training.setdefault("exploration_epsilon", 0.0)
    training.setdefault("batch_size", 1)
    training.setdefault("reward_floor", 1e-8)
    training.setdefault("seed", 0)
    try:
        trainer.TrainConfig(
            iterations=training["iterations"],
            loss_mode=training["loss_mode"],
            exploration_epsilon=training["exploration_epsilon"],
            batch_size=training["batch_size"],
            reward_floor=training["reward_floor"],
            seed=training["seed"],
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), "training") from exc

    ev = _require(raw, "evaluator", dict, "config")
    kind = _require(ev, "kind", str, "evaluator")
    if kind == "tabular":
        _reject_unknown(ev, {"kind", "table"}, "evaluator")
        table = _require(ev, "table", dict, "evaluator")
        _validate_table(table, wavelets, activations, n_blocks)
    elif kind == "synthetic":
        _reject_unknown(ev, {"kind", "weights"}, "evaluator")
        weights = _require(ev, "weights", list, "evaluator")
        _validate_weights(weights, wavelets, activations, n_blocks)
    elif kind == "external":
        _reject_unknown(
            ev, {"kind", "command", "args", "budget", "timeout", "retries", "cache"},
            "evaluator",
        )
        command = ev.get("command")
        if isinstance(command, str):
            command = [command]
        if not isinstance(command, list) or not command or not all(
            isinstance(c, str) for c in command
        ):
            raise ConfigError("command must be a non-empty string list", "evaluator.command")
        ev["command"] = command + [str(a) for a in ev.get("args", [])]
        ev.pop("args", None)
        budget = dict(ev.get("budget", {}))
        _reject_unknown(budget, {"epochs"}, "evaluator.budget")
        if "epochs" in budget and (not isinstance(budget["epochs"], int) or budget["epochs"] < 1):
            raise ConfigError("epochs must be a positive integer", "evaluator.budget")
        ev["budget"] = budget
        ev.setdefault("timeout", 600.0)
        ev.setdefault("retries", 1)
        ev.setdefault("cache", None)
    else:
        raise ConfigError(
            f"kind must be tabular, synthetic, or external, got {kind!r}",
            "evaluator.kind",
        )

    effective = {
        "search_space": {
            "wavelets": list(wavelets),
            "activations": list(activations),
            "n_blocks": n_blocks,
        },
        "policy": policy,
        "training": training,
        "evaluator": ev,
        "output_dir": raw.get("output_dir", "runs/latest"),
    }
    if not isinstance(effective["output_dir"], str):
        raise ConfigError("output_dir must be a string", "output_dir")
    return effective


def _validate_table(table: dict, wavelets, activations, n_blocks) -> None:
    space = SearchSpace(tuple(wavelets), tuple(activations), n_blocks)
    for key, value in table.items():
        try:
            arch = ArchitectureSpec.from_string(key)
        except ValueError as exc:
            raise ConfigError(str(exc), "evaluator.table") from exc
        if len(arch.blocks) != n_blocks:
            raise ConfigError(f"{key!r} has wrong block count", "evaluator.table")
        for w, a in arch.blocks:
            if w not in space.wavelets or a not in space.activations:
                raise ConfigError(f"{key!r} uses unknown identifiers", "evaluator.table")
        if not isinstance(value, (int, float)) or isinstance(value, bool) or value <= 0:
            raise ConfigError(f"reward for {key!r} must be > 0", "evaluator.table")
    if space.n_terminals <= TABLE_COVERAGE_CHECK_LIMIT:
        missing = [
            str(decode(t, space))
            for t in enumerate_terminals(space)
            if str(decode(t, space)) not in table
        ]
        if missing:
            raise ConfigError(
                f"table is missing {len(missing)} terminals, e.g. {missing[0]!r}",
                "evaluator.table",
            )


def _validate_weights(weights, wavelets, activations, n_blocks) -> None:
    if len(weights) != 2 * n_blocks:
        raise ConfigError(
            f"need {2 * n_blocks} weight tables, got {len(weights)}",
            "evaluator.weights",
        )
    for slot, table in enumerate(weights):
        expected = len(wavelets) if slot % 2 == 0 else len(activations)
        if not isinstance(table, list) or len(table) != expected:
            raise ConfigError(f"slot {slot} table must have {expected} entries",
                              "evaluator.weights")
        if not all(isinstance(w, (int, float)) and not isinstance(w, bool) and w > 0
                   for w in table):
            raise ConfigError(f"slot {slot} weights must be positive",
                              "evaluator.weights")


def load_config(path: str | Path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}",
                          str(path))
    return validate_config(raw)


def config_hash(effective: dict) -> str:
    canonical = json.dumps(effective, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------

def build_space(effective: dict) -> SearchSpace:
    ss = effective["search_space"]
    return SearchSpace(tuple(ss["wavelets"]), tuple(ss["activations"]), ss["n_blocks"])


def build_evaluator(effective: dict, space: SearchSpace) -> tuple[RewardEvaluator, Budget | None]:
    ev = effective["evaluator"]
    if ev["kind"] == "tabular":
        table = {
            ArchitectureSpec.from_string(key): float(value)
            for key, value in ev["table"].items()
        }
        return TabularEvaluator(table), None
    if ev["kind"] == "synthetic":
        return SyntheticEvaluator(space, ev["weights"]), None
    budget = Budget(epochs=ev["budget"].get("epochs"))
    evaluator = ExternalEvaluator(
        ev["command"], budget=budget,
        timeout=float(ev["timeout"]), retries=int(ev["retries"]),
    )
    if ev["cache"] is False:
        evaluator.deterministic = False  # operator opt-out disables caching
    elif ev["cache"] is True and not evaluator.deterministic:
        raise ConfigError(
            "cache requested but evaluator declares itself non-deterministic",
            "evaluator.cache",
        )
    return evaluator, budget


def train_config_from(effective: dict, seed_override: int | None = None) -> trainer.TrainConfig:
    tr = effective["training"]
    return trainer.TrainConfig(
        iterations=tr["iterations"],
        loss_mode=tr["loss_mode"],
        exploration_epsilon=tr["exploration_epsilon"],
        batch_size=tr["batch_size"],
        reward_floor=tr["reward_floor"],
        seed=tr["seed"] if seed_override is None else seed_override,
        hidden_dim=effective["policy"]["hidden_dim"],
        learning_rate=effective["policy"]["learning_rate"],
    )


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_train(config_path: str, seed: int | None = None, out: str | None = None) -> int:
    try:
        effective = load_config(config_path)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    if seed is not None:
        effective["training"]["seed"] = seed
    if out is not None:
        effective["output_dir"] = out
    run_dir = Path(effective["output_dir"])
    run_dir.mkdir(parents=True, exist_ok=True)
    digest = config_hash(effective)
    (run_dir / "config_echo.json").write_text(
        json.dumps(effective, indent=1, sort_keys=True) + "\n"
    )

    space = build_space(effective)
    cfg = train_config_from(effective)
    try:
        with_evaluator = build_evaluator(effective, space)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    except FlowNasError as exc:
        print(f"error: evaluator startup failed: {exc}", file=sys.stderr)
        return EXIT_EVALUATOR_ABORT
    evaluator, budget = with_evaluator
    try:
        n_w, n_a, log = trainer.train(space, evaluator, cfg, budget)
    except FlowNasError as exc:
        print(f"error: training aborted: {exc}", file=sys.stderr)
        return EXIT_EVALUATOR_ABORT
    finally:
        evaluator.close()

    with (run_dir / "log.jsonl").open("w") as fh:
        for record in log.jsonl_records():
            fh.write(json.dumps(record) + "\n")
    checkpoint.save_checkpoint(run_dir / "checkpoint.json", space, n_w, n_a,
                               config_hash=digest)
    best = trainer.best_observed(log)
    summary = {
        "version": __version__,
        "config": effective,
        "config_hash": digest,
        "best_architecture": str(best),
        "best_reward": log.visits[best].best_reward,
        "visit_table": log.visit_table(),
        "total_trajectories": log.total_trajectories,
        "clamped_rewards": log.clamped_rewards,
        "skipped_iterations": log.skipped_iterations,
        "cache_enabled": log.cache_enabled,
    }
    (run_dir / "summary.json").write_text(
        json.dumps(summary, indent=1, sort_keys=True) + "\n"
    )
    print(f"best architecture: {best} (reward {log.visits[best].best_reward:.6g})")
    print(f"run artifacts in {run_dir}")
    return EXIT_OK


def cmd_sample(checkpoint_path: str, count: int) -> int:
    try:
        doc = checkpoint.load_checkpoint(checkpoint_path)
    except CheckpointError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_ARTIFACT
    rng = np.random.default_rng(0)
    frequencies = trainer.sample_terminals(
        doc["n_w"], doc["n_a"], doc["space"], count, rng
    )
    print(json.dumps(
        [{"architecture": str(arch), "frequency": freq} for arch, freq in frequencies],
        indent=1,
    ))
    return EXIT_OK


def cmd_oracle(config_path: str, checkpoint_path: str | None = None) -> int:
    try:
        effective = load_config(config_path)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    space = build_space(effective)
    try:
        evaluator, _ = build_evaluator(effective, space)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    if not evaluator.deterministic:
        print("error: oracle requires a deterministic evaluator", file=sys.stderr)
        evaluator.close()
        return EXIT_EVALUATOR_ABORT
    try:
        table = oracle.exact_flows(space, evaluator)
    except EnumerationTooLargeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ORACLE_CAP
    except FlowNasError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EVALUATOR_ABORT
    finally:
        evaluator.close()

    empirical = None
    if checkpoint_path is not None:
        try:
            doc = checkpoint.load_checkpoint(checkpoint_path)
        except CheckpointError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_BAD_ARTIFACT
        rng = np.random.default_rng(0)
        empirical = oracle.empirical_distribution(
            doc["n_w"], doc["n_a"], space, ORACLE_SAMPLE_COUNT, rng
        )
    print(json.dumps(oracle.oracle_report(space, table, empirical), indent=1))
    return EXIT_OK


def cmd_report(run_dir: str) -> int:
    summary_path = Path(run_dir) / "summary.json"
    try:
        summary = json.loads(summary_path.read_text())
        rows = summary["visit_table"]
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: cannot read run summary: {exc}", file=sys.stderr)
        return EXIT_BAD_ARTIFACT
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(["rank", "architecture", "visits", "best_reward", "last_reward"])
    for rank, row in enumerate(rows, start=1):
        writer.writerow([rank, row["architecture"], row["visits"],
                         row["best_reward"], row["last_reward"]])
    sys.stdout.write(out.getvalue())
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flownas",
        description="Generative-flow architecture search over wavelet/activation sequences",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run a search from a config file")
    p_train.add_argument("--config", required=True)
    p_train.add_argument("--seed", type=int, default=None)
    p_train.add_argument("--out", default=None)

    p_sample = sub.add_parser("sample", help="sample architectures from a checkpoint")
    p_sample.add_argument("--checkpoint", required=True)
    p_sample.add_argument("--count", type=int, required=True)

    p_oracle = sub.add_parser("oracle", help="exact reward-proportional distribution")
    p_oracle.add_argument("--config", required=True)
    p_oracle.add_argument("--checkpoint", default=None)

    p_report = sub.add_parser("report", help="CSV visit report for a run directory")
    p_report.add_argument("--run", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "train":
        return cmd_train(args.config, seed=args.seed, out=args.out)
    if args.command == "sample":
        return cmd_sample(args.checkpoint, args.count)
    if args.command == "oracle":
        return cmd_oracle(args.config, checkpoint_path=args.checkpoint)
    return cmd_report(args.run)


if __name__ == "__main__":
    sys.exit(main())
