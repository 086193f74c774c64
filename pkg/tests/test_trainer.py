import math

import numpy as np
import pytest
from scipy import stats

from flownas import policy_net, trainer
from flownas.errors import EvaluatorFailure, FlowNasError
from flownas.evaluators import RewardEvaluator, TabularEvaluator
from flownas.policy_net import FlowNetwork
from flownas.search_space import SearchSpace, Trajectory, decode, enumerate_terminals
from flownas.trainer import (
    RunLog,
    TrainConfig,
    best_observed,
    rollout,
    sample_terminals,
    train,
    trajectory_loss,
)


def zero_net(input_dim, output_dim, hidden=4):
    return FlowNetwork(
        np.zeros((hidden, input_dim)), np.zeros(hidden),
        np.zeros((output_dim, hidden)), np.zeros(output_dim),
    )


def space_2x2(n_blocks=1):
    return SearchSpace(("w0", "w1"), ("a0", "a1"), n_blocks)


def tabular(space, rewards):
    terms = enumerate_terminals(space)
    return TabularEvaluator({decode(t, space): float(r) for t, r in zip(terms, rewards)})


class TestTrainConfig:
    def test_defaults(self):
        cfg = TrainConfig()
        assert cfg.iterations == 500
        assert cfg.loss_mode == "log_scale"
        assert cfg.exploration_epsilon == 0.0
        assert cfg.batch_size == 1
        assert cfg.reward_floor == 1e-8
        assert cfg.learning_rate == 1e-3
        assert cfg.hidden_dim == 16

    @pytest.mark.parametrize("kwargs", [
        {"iterations": 0},
        {"loss_mode": "squared"},
        {"exploration_epsilon": 1.0},
        {"exploration_epsilon": -0.1},
        {"batch_size": 0},
        {"reward_floor": 0.0},
    ])
    def test_invalid_values_rejected(self, kwargs):
        with pytest.raises(ValueError):
            TrainConfig(**kwargs)


class TestRollout:
    def test_single_action_space_is_deterministic(self):
        space = SearchSpace(("w0",), ("a0",), 2)
        n_w = zero_net(space.encoding_dim, 1)
        n_a = zero_net(space.encoding_dim, 1)
        traj = rollout(n_w, n_a, space, 0.0, np.random.default_rng(0))
        assert traj.terminal == (0, 0, 0, 0)
        assert traj.actions == (0, 0, 0, 0)

    def test_zero_nets_sample_uniformly(self):
        space = space_2x2()
        n_w = zero_net(space.encoding_dim, 2)
        n_a = zero_net(space.encoding_dim, 2)
        rng = np.random.default_rng(42)
        counts = {t: 0 for t in enumerate_terminals(space)}
        for _ in range(10_000):
            counts[rollout(n_w, n_a, space, 0.0, rng).terminal] += 1
        result = stats.chisquare(list(counts.values()))
        assert result.pvalue > 0.001

    def test_epsilon_one_ignores_weights(self):
        space = space_2x2()
        n_w = zero_net(space.encoding_dim, 2)
        n_a = zero_net(space.encoding_dim, 2)
        # bias one action so strongly that flow-sampling would be a point mass
        n_w.b2[:] = [50.0, -50.0]
        n_a.b2[:] = [50.0, -50.0]
        rng = np.random.default_rng(3)
        counts = {t: 0 for t in enumerate_terminals(space)}
        for _ in range(10_000):
            counts[rollout(n_w, n_a, space, 1.0, rng).terminal] += 1
        result = stats.chisquare(list(counts.values()))
        assert result.pvalue > 0.001

    def test_trajectory_has_2n_actions(self):
        space = space_2x2(3)
        n_w = zero_net(space.encoding_dim, 2)
        n_a = zero_net(space.encoding_dim, 2)
        traj = rollout(n_w, n_a, space, 0.0, np.random.default_rng(1))
        assert len(traj.actions) == 6
        assert len(traj.states) == 7

    def test_non_finite_flows_abort(self):
        space = space_2x2()
        n_w = zero_net(space.encoding_dim, 2)
        n_w.b2[0] = np.nan
        n_a = zero_net(space.encoding_dim, 2)
        with pytest.raises(FlowNasError):
            rollout(n_w, n_a, space, 0.0, np.random.default_rng(0))


class TestTrajectoryLoss:
    def single_path_setup(self, log_f_root, log_f_leaf):
        """|W| = |A| = 1: one trajectory, flows set via output biases."""
        space = SearchSpace(("w0",), ("a0",), 1)
        n_w = zero_net(space.encoding_dim, 1)
        n_a = zero_net(space.encoding_dim, 1)
        n_w.b2[0] = log_f_root
        n_a.b2[0] = log_f_leaf
        traj = Trajectory(states=((), (0,), (0, 0)), actions=(0, 0))
        return space, n_w, n_a, traj

    def test_exact_flows_give_zero_loss(self):
        # F(s0,w) = 1 = F({w},a) = R: balanced at every state
        space, n_w, n_a, traj = self.single_path_setup(0.0, 0.0)
        for mode in ("raw", "log_scale"):
            loss, gw, ga = trajectory_loss(n_w, n_a, traj, 1.0, space, mode=mode)
            assert loss == pytest.approx(0.0, abs=1e-30)

    def test_raw_loss_hand_value(self):
        # F(s0,w)=2, F({w},a)=1, R=1: (2-1)^2 + (1-0-1)^2 = 1
        space, n_w, n_a, traj = self.single_path_setup(math.log(2.0), 0.0)
        loss, _, _ = trajectory_loss(n_w, n_a, traj, 1.0, space, mode="raw")
        assert loss == pytest.approx(1.0, rel=1e-12)

    def test_log_loss_hand_value(self):
        # (log 2 - log 1)^2 + (log 1 - log 1)^2 = (ln 2)^2
        space, n_w, n_a, traj = self.single_path_setup(math.log(2.0), 0.0)
        loss, _, _ = trajectory_loss(n_w, n_a, traj, 1.0, space, mode="log_scale")
        assert loss == pytest.approx(math.log(2.0) ** 2, rel=1e-12)

    def test_loss_non_negative(self):
        space = space_2x2(2)
        rng = np.random.default_rng(8)
        n_w = policy_net.init(space.encoding_dim, 4, 2, seed=1)
        n_a = policy_net.init(space.encoding_dim, 4, 2, seed=2)
        for _ in range(20):
            traj = rollout(n_w, n_a, space, 0.5, rng)
            for mode in ("raw", "log_scale"):
                loss, _, _ = trajectory_loss(
                    n_w, n_a, traj, float(rng.uniform(0.1, 5.0)), space, mode=mode
                )
                assert loss >= 0.0

    def test_incomplete_trajectory_rejected(self):
        space = space_2x2(2)
        n_w = zero_net(space.encoding_dim, 2)
        n_a = zero_net(space.encoding_dim, 2)
        short = Trajectory(states=((), (0,), (0, 0)), actions=(0, 0))
        with pytest.raises(FlowNasError):
            trajectory_loss(n_w, n_a, short, 1.0, space)

    def test_reward_below_floor_clamped(self):
        space, n_w, n_a, traj = self.single_path_setup(0.0, 0.0)
        # log(0) would blow up without the floor
        loss, _, _ = trajectory_loss(n_w, n_a, traj, 0.0, space,
                                     mode="log_scale", reward_floor=1e-8)
        assert math.isfinite(loss)
        assert loss == pytest.approx(math.log(1e-8) ** 2, rel=1e-10)

    @pytest.mark.parametrize("mode", ["raw", "log_scale"])
    def test_gradients_match_finite_differences(self, mode):
        # |W|=3, |A|=1, one block: N_w is a 4-2-3 net, N_a is 4-2-1
        space = SearchSpace(("w0", "w1", "w2"), ("a0",), 1)
        n_w = policy_net.init(space.encoding_dim, 2, 3, seed=31)
        n_a = policy_net.init(space.encoding_dim, 2, 1, seed=32)
        rng = np.random.default_rng(5)
        n_w.b1[:] = rng.normal(size=2) * 0.3
        n_w.b2[:] = rng.normal(size=3) * 0.3
        n_a.b2[:] = rng.normal(size=1) * 0.3
        traj = Trajectory(states=((), (1,), (1, 0)), actions=(1, 0))
        reward = 0.7

        _, gw, ga = trajectory_loss(n_w, n_a, traj, reward, space, mode=mode)
        h = 1e-5
        for net, analytic in ((n_w, gw), (n_a, ga)):
            for param, grad in zip(net.parameters(), analytic.params()):
                flat, gflat = param.ravel(), grad.ravel()
                for idx in range(flat.size):
                    keep = flat[idx]
                    flat[idx] = keep + h
                    up = trajectory_loss(n_w, n_a, traj, reward, space, mode=mode)[0]
                    flat[idx] = keep - h
                    down = trajectory_loss(n_w, n_a, traj, reward, space, mode=mode)[0]
                    flat[idx] = keep
                    fd = (up - down) / (2 * h)
                    scale = max(abs(fd), abs(gflat[idx]), 1e-6)
                    assert abs(gflat[idx] - fd) / scale <= 1e-4


class TestTrain:
    def test_constant_rewards_give_uniform_policy(self):
        space = space_2x2()
        evaluator = tabular(space, [2.0, 2.0, 2.0, 2.0])
        cfg = TrainConfig(iterations=2000, seed=3)
        n_w, n_a, _ = train(space, evaluator, cfg)
        counts = {t: 0 for t in enumerate_terminals(space)}
        rng = np.random.default_rng(17)
        n = 10_000
        for _ in range(n):
            counts[rollout(n_w, n_a, space, 0.0, rng).terminal] += 1
        tv = 0.5 * sum(abs(c / n - 0.25) for c in counts.values())
        assert tv <= 0.05

    def test_tabular_1234_reaches_target_distribution(self):
        space = space_2x2()
        evaluator = tabular(space, [1.0, 2.0, 3.0, 4.0])
        cfg = TrainConfig(iterations=5000, seed=7)
        n_w, n_a, _ = train(space, evaluator, cfg)
        target = {t: r / 10.0 for t, r in zip(enumerate_terminals(space),
                                              [1.0, 2.0, 3.0, 4.0])}
        counts = {t: 0 for t in enumerate_terminals(space)}
        rng = np.random.default_rng(23)
        n = 10_000
        for _ in range(n):
            counts[rollout(n_w, n_a, space, 0.0, rng).terminal] += 1
        tv = 0.5 * sum(abs(counts[t] / n - target[t]) for t in target)
        assert tv <= 0.05

    def test_deterministic_run_log(self):
        space = space_2x2()
        evaluator = tabular(space, [1.0, 2.0, 3.0, 4.0])
        cfg = TrainConfig(iterations=50, seed=5, batch_size=2)
        _, _, log_a = train(space, evaluator, cfg)
        _, _, log_b = train(space, tabular(space, [1.0, 2.0, 3.0, 4.0]), cfg)
        assert [(r.iteration, r.architecture, r.reward, r.loss)
                for r in log_a.records] == \
               [(r.iteration, r.architecture, r.reward, r.loss)
                for r in log_b.records]

    def test_visit_counts_sum_to_total(self):
        space = space_2x2()
        evaluator = tabular(space, [1.0, 2.0, 3.0, 4.0])
        cfg = TrainConfig(iterations=40, seed=1, batch_size=3)
        _, _, log = train(space, evaluator, cfg)
        assert sum(vs.count for vs in log.visits.values()) == 40 * 3
        assert log.total_trajectories == 120

    def test_reward_floor_clamp_counter(self):
        space = SearchSpace(("w0",), ("a0",), 1)
        evaluator = tabular(space, [1e-12])
        cfg = TrainConfig(iterations=5, seed=1, reward_floor=1e-8)
        _, _, log = train(space, evaluator, cfg)
        assert log.clamped_rewards == 5

    def test_caching_enabled_for_deterministic_evaluator(self):
        space = space_2x2()
        calls = []

        class Counting(RewardEvaluator):
            deterministic = True

            def evaluate(self, arch, budget=None):
                calls.append(arch)
                return 1.0

        cfg = TrainConfig(iterations=200, seed=0)
        _, _, log = train(space, Counting(), cfg)
        assert log.cache_enabled
        assert len(calls) == len(set(calls))  # at most one call per architecture

    def test_failing_evaluator_skips_then_aborts(self):
        space = space_2x2()

        class Flaky(RewardEvaluator):
            deterministic = False

            def __init__(self):
                self.n = 0

            def evaluate(self, arch, budget=None):
                self.n += 1
                if self.n % 2 == 0:
                    raise EvaluatorFailure("boom")
                return 1.0

        cfg = TrainConfig(iterations=100, seed=0)
        with pytest.raises(EvaluatorFailure, match="10%"):
            train(space, Flaky(), cfg)


class TestSampleTerminals:
    def test_single_sample_is_point_mass(self):
        space = space_2x2()
        n_w = zero_net(space.encoding_dim, 2)
        n_a = zero_net(space.encoding_dim, 2)
        result = sample_terminals(n_w, n_a, space, 1, np.random.default_rng(0))
        assert len(result) == 1
        assert result[0][1] == 1.0

    def test_frequencies_sum_to_one(self):
        space = space_2x2()
        n_w = zero_net(space.encoding_dim, 2)
        n_a = zero_net(space.encoding_dim, 2)
        result = sample_terminals(n_w, n_a, space, 500, np.random.default_rng(1))
        assert sum(f for _, f in result) == pytest.approx(1.0, abs=1e-12)

    def test_untrained_zero_nets_near_uniform(self):
        space = space_2x2()
        n_w = zero_net(space.encoding_dim, 2)
        n_a = zero_net(space.encoding_dim, 2)
        result = dict(sample_terminals(n_w, n_a, space, 10_000,
                                       np.random.default_rng(2)))
        assert all(abs(f - 0.25) < 0.03 for f in result.values())


class TestBestObserved:
    def make_log(self, space, entries):
        log = RunLog(space=space)
        for arch, reward, n in entries:
            for _ in range(n):
                log.record(0, arch, reward, 0.0, 0.0)
        return log

    def test_single_architecture(self):
        space = space_2x2()
        arch = decode((0, 0), space)
        log = self.make_log(space, [(arch, 0.5, 1)])
        assert best_observed(log) == arch

    def test_argmax_reward(self):
        space = space_2x2()
        a, b = decode((0, 0), space), decode((0, 1), space)
        log = self.make_log(space, [(a, 0.9, 1), (b, 0.95, 1)])
        assert best_observed(log) == b

    def test_tie_broken_by_visits(self):
        space = space_2x2()
        a, b = decode((1, 1), space), decode((0, 1), space)
        log = self.make_log(space, [(a, 0.9, 3), (b, 0.9, 1)])
        assert best_observed(log) == a

    def test_tie_broken_by_lexicographic_order(self):
        space = space_2x2()
        a, b = decode((1, 0), space), decode((0, 1), space)
        log = self.make_log(space, [(a, 0.9, 2), (b, 0.9, 2)])
        assert best_observed(log) == b  # (0,1) precedes (1,0)

    def test_empty_log_rejected(self):
        with pytest.raises(FlowNasError):
            best_observed(RunLog(space=space_2x2()))


class TestFlowConservation:
    def test_converged_small_instance_residual(self):
        # raw-scale residual of a converged run, normalized by reward^2
        space = space_2x2()
        evaluator = tabular(space, [1.0, 2.0, 3.0, 4.0])
        cfg = TrainConfig(iterations=6000, seed=9, batch_size=4)
        n_w, n_a, _ = train(space, evaluator, cfg)
        rng = np.random.default_rng(31)
        total = 0.0
        for _ in range(100):
            traj = rollout(n_w, n_a, space, 0.0, rng)
            reward = evaluator.evaluate(decode(traj.terminal, space))
            raw, _, _ = trajectory_loss(n_w, n_a, traj, reward, space, mode="raw")
            total += raw / reward**2
        assert total / 100 <= 1e-2
