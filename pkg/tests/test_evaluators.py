import math
import sys
from pathlib import Path

import pytest

from flownas.errors import (
    ContractViolationError,
    EvaluatorFailure,
    ProtocolError,
    UnknownArchitectureError,
)
from flownas.evaluators import (
    Budget,
    CachingEvaluator,
    ExternalEvaluator,
    RewardEvaluator,
    SyntheticEvaluator,
    TabularEvaluator,
    check_reward_consistency,
)
from flownas.search_space import ArchitectureSpec, SearchSpace, decode, enumerate_terminals

STUB = Path(__file__).parent / "stub_evaluator.py"


def stub_command(mode="normal"):
    return [sys.executable, str(STUB), mode]


def space_2x2():
    return SearchSpace(("w0", "w1"), ("a0", "a1"), 1)


class TestTabular:
    def test_lookup(self):
        space = space_2x2()
        terms = enumerate_terminals(space)
        table = {decode(t, space): r for t, r in zip(terms, [1.0, 2.0, 3.0, 4.0])}
        ev = TabularEvaluator(table)
        assert ev.evaluate(decode((1, 1), space)) == 4.0
        assert ev.deterministic and ev.concurrent_safe

    def test_missing_key(self):
        ev = TabularEvaluator({ArchitectureSpec((("w0", "a0"),)): 1.0})
        with pytest.raises(UnknownArchitectureError):
            ev.evaluate(ArchitectureSpec((("w1", "a0"),)))

    def test_all_equal_table(self):
        space = space_2x2()
        ev = TabularEvaluator({decode(t, space): 0.5 for t in enumerate_terminals(space)})
        assert {ev.evaluate(decode(t, space)) for t in enumerate_terminals(space)} == {0.5}

    def test_non_positive_reward_rejected(self):
        with pytest.raises(ValueError):
            TabularEvaluator({ArchitectureSpec((("w0", "a0"),)): 0.0})


class TestSynthetic:
    def test_all_ones(self):
        space = space_2x2()
        ev = SyntheticEvaluator(space, [[1.0, 1.0], [1.0, 1.0]])
        for term in enumerate_terminals(space):
            assert ev.evaluate(decode(term, space)) == 1.0

    def test_product_form(self):
        space = space_2x2()
        ev = SyntheticEvaluator(space, [[2.0, 1.0], [1.0, 3.0]])
        assert ev.evaluate(decode((0, 1), space)) == 6.0
        # normalization over the four terminals: Z = 2 + 6 + 1 + 3 = 12
        rewards = {t: ev.evaluate(decode(t, space)) for t in enumerate_terminals(space)}
        z = sum(rewards.values())
        assert z == 12.0
        probs = {t: r / z for t, r in rewards.items()}
        assert probs[(0, 1)] == pytest.approx(0.5)

    def test_shape_mismatch(self):
        space = space_2x2()
        with pytest.raises(ValueError):
            SyntheticEvaluator(space, [[1.0, 1.0]])
        with pytest.raises(ValueError):
            SyntheticEvaluator(space, [[1.0], [1.0, 1.0]])

    def test_positive_weights_required(self):
        with pytest.raises(ValueError):
            SyntheticEvaluator(space_2x2(), [[1.0, 0.0], [1.0, 1.0]])


class TestCaching:
    class Counting(RewardEvaluator):
        deterministic = True

        def __init__(self):
            self.calls = 0

        def evaluate(self, arch, budget=None):
            self.calls += 1
            return 2.0

    def test_one_call_per_architecture(self):
        inner = self.Counting()
        cached = CachingEvaluator(inner)
        arch_a = ArchitectureSpec((("w0", "a0"),))
        arch_b = ArchitectureSpec((("w1", "a0"),))
        for _ in range(5):
            cached.evaluate(arch_a)
            cached.evaluate(arch_b)
        assert inner.calls == 2
        assert cached.hits == 8 and cached.misses == 2

    def test_non_deterministic_rejected(self):
        class Noisy(RewardEvaluator):
            deterministic = False

            def evaluate(self, arch, budget=None):
                return 1.0

        with pytest.raises(ValueError):
            CachingEvaluator(Noisy())


class TestRewardConsistency:
    def test_accepts_matching_pair(self):
        check_reward_consistency(math.exp(-0.0175), {"val_loss": 0.0175})
        assert math.exp(-0.0175) == pytest.approx(0.98265, abs=5e-6)

    def test_accepts_zero_loss(self):
        check_reward_consistency(1.0, {"val_loss": 0.0})

    def test_rejects_mismatch(self):
        with pytest.raises(ContractViolationError):
            check_reward_consistency(0.9, {"val_loss": 0.0175})

    def test_no_val_loss_is_fine(self):
        check_reward_consistency(0.5, {})

    def test_monotone_in_loss(self):
        # lower validation loss must mean strictly higher reward
        losses = [0.5, 0.3, 0.1, 0.01, 0.0]
        rewards = [math.exp(-x) for x in losses]
        assert rewards == sorted(rewards)


class TestExternal:
    def arch(self):
        return ArchitectureSpec((("db6", "gelu"), ("sym6", "elu")))

    def test_handshake_and_round_trip(self):
        with ExternalEvaluator(stub_command()) as ev:
            assert ev.deterministic and not ev.concurrent_safe
            reward = ev.evaluate(self.arch())
            assert 0.0 < reward <= 1.0
            # same architecture twice: identical reward (stub is deterministic)
            assert ev.evaluate(self.arch()) == reward

    def test_budget_forwarded(self):
        with ExternalEvaluator(stub_command(), budget=Budget(epochs=20)) as ev:
            assert ev.evaluate(self.arch(), Budget(epochs=5)) > 0.0

    def test_mismatched_id_is_protocol_error(self):
        with ExternalEvaluator(stub_command("bad-id")) as ev:
            with pytest.raises(ProtocolError):
                ev.evaluate(self.arch())

    def test_negative_reward_is_contract_violation(self):
        with ExternalEvaluator(stub_command("negative")) as ev:
            with pytest.raises(ContractViolationError):
                ev.evaluate(self.arch())

    def test_malformed_line_is_protocol_error(self):
        with ExternalEvaluator(stub_command("malformed")) as ev:
            with pytest.raises(ProtocolError):
                ev.evaluate(self.arch())

    def test_inconsistent_metrics_rejected(self):
        with ExternalEvaluator(stub_command("inconsistent")) as ev:
            with pytest.raises(ContractViolationError):
                ev.evaluate(self.arch())

    def test_log_lines_forwarded_and_skipped(self):
        with ExternalEvaluator(stub_command("logging")) as ev:
            assert ev.evaluate(self.arch()) > 0.0
            assert len(ev.log_lines) == 1
            assert "evaluating" in ev.log_lines[0]["message"]

    def test_timeout_retries_then_fails(self):
        ev = ExternalEvaluator(stub_command("slow"), timeout=0.5, retries=1)
        try:
            with pytest.raises(EvaluatorFailure):
                ev.evaluate(self.arch())
        finally:
            ev.close()

    def test_timeout_retry_recovers(self, tmp_path):
        # first request hangs; the retry respawns the child and succeeds
        sentinel = tmp_path / "first_request_seen"
        ev = ExternalEvaluator(stub_command("slow-once") + [str(sentinel)],
                               timeout=2.0, retries=1)
        try:
            assert ev.evaluate(self.arch()) > 0.0
        finally:
            ev.close()

    def test_shutdown_exits_zero(self):
        ev = ExternalEvaluator(stub_command())
        proc = ev._proc
        ev.close()
        assert proc.wait(timeout=10) == 0
