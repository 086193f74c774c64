"""Flow-matching training loop over the wavelet/activation tree.

Each iteration rolls out trajectories by alternating the two policy nets,
scores the terminal architectures through the evaluator, accumulates the
flow-consistency loss along each trajectory, and applies one Adam step per
network.  Because the state graph is a tree, the inflow of every state is the
single edge flow from its unique parent, so the per-state balance reduces to

    F(parent, action) = R(state) + sum_a' F(state, a')

with R zero everywhere except terminals.  Both the raw squared imbalance and
the log-scale variant of that residual are implemented; log_scale is the
default because raw flows near the root are orders of magnitude larger than
near the leaves.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import policy_net
from .errors import EvaluatorFailure, FlowNasError
from .evaluators import Budget, CachingEvaluator, RewardEvaluator
from .policy_net import AdamState, FlowNetwork, NetGradients
from .search_space import (
    ArchitectureSpec,
    SearchSpace,
    SlotKind,
    State,
    Trajectory,
    decode,
    encode,
    next_slot_kind,
    terminal_state,
)

LOSS_MODES = ("log_scale", "raw")


@dataclass
class TrainConfig:
    iterations: int = 500
    loss_mode: str = "log_scale"
    exploration_epsilon: float = 0.0
    batch_size: int = 1
    reward_floor: float = 1e-8
    seed: int = 0
    hidden_dim: int = policy_net.DEFAULT_HIDDEN_DIM
    learning_rate: float = policy_net.DEFAULT_LEARNING_RATE

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.loss_mode not in LOSS_MODES:
            raise ValueError(f"loss_mode must be one of {LOSS_MODES}")
        if not 0.0 <= self.exploration_epsilon < 1.0:
            raise ValueError("exploration_epsilon must lie in [0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.reward_floor <= 0.0:
            raise ValueError("reward_floor must be > 0")


@dataclass
class VisitStats:
    count: int = 0
    best_reward: float = -math.inf
    last_reward: float = math.nan


@dataclass
class TrajectoryRecord:
    iteration: int
    architecture: ArchitectureSpec
    reward: float
    loss: float
    wall_time: float


@dataclass
class RunLog:
    space: SearchSpace
    records: list[TrajectoryRecord] = field(default_factory=list)
    visits: dict[ArchitectureSpec, VisitStats] = field(default_factory=dict)
    clamped_rewards: int = 0
    skipped_iterations: int = 0
    cache_enabled: bool = False

    def record(self, iteration: int, arch: ArchitectureSpec, reward: float,
               loss: float, wall_time: float) -> None:
        self.records.append(TrajectoryRecord(iteration, arch, reward, loss, wall_time))
        stats = self.visits.setdefault(arch, VisitStats())
        stats.count += 1
        stats.best_reward = max(stats.best_reward, reward)
        stats.last_reward = reward

    @property
    def total_trajectories(self) -> int:
        return len(self.records)

    def jsonl_records(self) -> list[dict]:
        return [
            {
                "iteration": r.iteration,
                "architecture": str(r.architecture),
                "reward": r.reward,
                "loss": r.loss,
                "wall_time": r.wall_time,
            }
            for r in self.records
        ]

    def visit_table(self) -> list[dict]:
        """Visit stats sorted by best reward descending (deterministic)."""
        rows = [
            {
                "architecture": str(arch),
                "visits": stats.count,
                "best_reward": stats.best_reward,
                "last_reward": stats.last_reward,
            }
            for arch, stats in self.visits.items()
        ]
        rows.sort(key=lambda row: (-row["best_reward"], row["architecture"]))
        return rows


def _net_for(state: State, space: SearchSpace, n_w: FlowNetwork,
             n_a: FlowNetwork) -> FlowNetwork:
    kind = next_slot_kind(state, space)
    if kind is SlotKind.TERMINAL:
        raise FlowNasError("terminal state has no policy network")
    return n_w if kind is SlotKind.WAVELET else n_a


def rollout(
    n_w: FlowNetwork,
    n_a: FlowNetwork,
    space: SearchSpace,
    epsilon: float,
    rng: np.random.Generator,
) -> Trajectory:
    """Sample one root-to-terminal path, action probability proportional to flow.

    With probability epsilon a step samples uniformly instead; epsilon zero
    reproduces pure flow-proportional sampling.
    """
    state: State = ()
    states = [state]
    actions = []
    for _ in range(space.n_slots):
        net = _net_for(state, space, n_w, n_a)
        log_flows, _ = policy_net.forward(net, encode(state, space))
        if not np.all(np.isfinite(log_flows)):
            raise FlowNasError(f"non-finite log-flows at state {state}")
        if epsilon > 0.0 and rng.random() < epsilon:
            probs = np.full(log_flows.size, 1.0 / log_flows.size)
        else:
            # softmax of log-flows == flows normalized, computed stably
            shifted = np.exp(log_flows - log_flows.max())
            probs = shifted / shifted.sum()
        action = int(np.searchsorted(np.cumsum(probs), rng.random()))
        action = min(action, log_flows.size - 1)  # guard cumsum rounding
        state = state + (action,)
        states.append(state)
        actions.append(action)
    return Trajectory(states=tuple(states), actions=tuple(actions))


def _stable_log_sum(reward: float, log_flows: np.ndarray) -> tuple[float, np.ndarray]:
    """log(reward + sum exp(log_flows)) and d/dlog_flows, overflow-safe."""
    m = float(log_flows.max())
    if reward > 0.0:
        m = max(m, math.log(reward))
    expo = np.exp(log_flows - m)
    total = reward * math.exp(-m) + float(expo.sum())
    log_total = m + math.log(total)
    return log_total, expo / total


def trajectory_loss(
    n_w: FlowNetwork,
    n_a: FlowNetwork,
    trajectory: Trajectory,
    terminal_reward: float,
    space: SearchSpace,
    mode: str = "log_scale",
    reward_floor: float = 1e-8,
) -> tuple[float, NetGradients, NetGradients]:
    """Flow-consistency loss of one complete trajectory, with exact gradients.

    raw mode:        sum_j (F_in - F_out - R_j)^2
    log_scale mode:  sum_j (log F_in - log(R_j + F_out))^2

    where F_in is the edge flow from the unique parent, F_out the total flow
    out of the reached state (zero at the terminal), and R_j zero except at
    the terminal.  Gradients flow into both networks through every F term.
    """
    if mode not in LOSS_MODES:
        raise ValueError(f"unknown loss mode {mode!r}")
    if len(trajectory.states) != space.n_slots + 1:
        raise FlowNasError("trajectory is incomplete for this space")
    reward = max(float(terminal_reward), reward_floor)

    # One forward per non-terminal state; cotangents accumulate from the
    # state's outflow role (its own step) and inflow role (the next step).
    n_states = space.n_slots  # non-terminal states s_0 .. s_{T-1}
    log_flows = []
    caches = []
    cotangents = []
    nets = []
    for k in range(n_states):
        net = _net_for(trajectory.states[k], space, n_w, n_a)
        lf, cache = policy_net.forward(net, encode(trajectory.states[k], space))
        if not np.all(np.isfinite(lf)):
            raise FlowNasError(f"non-finite log-flows at state {trajectory.states[k]}")
        log_flows.append(lf)
        caches.append(cache)
        cotangents.append(np.zeros_like(lf))
        nets.append(net)

    loss = 0.0
    for j in range(1, space.n_slots + 1):
        action = trajectory.actions[j - 1]
        parent_lf = log_flows[j - 1]
        log_f_in = float(parent_lf[action])
        is_terminal = j == space.n_slots
        r_j = reward if is_terminal else 0.0

        if mode == "raw":
            f_in = math.exp(log_f_in)
            if is_terminal:
                f_out = 0.0
                d_out = None
            else:
                flows = np.exp(log_flows[j])
                f_out = float(flows.sum())
                d_out = flows
            residual = f_in - f_out - r_j
            loss += residual * residual
            cotangents[j - 1][action] += 2.0 * residual * f_in
            if d_out is not None:
                cotangents[j] += -2.0 * residual * d_out
        else:
            if is_terminal:
                log_target = math.log(reward)
                d_target = None
            else:
                log_target, d_target = _stable_log_sum(r_j, log_flows[j])
            diff = log_f_in - log_target
            loss += diff * diff
            cotangents[j - 1][action] += 2.0 * diff
            if d_target is not None:
                cotangents[j] += -2.0 * diff * d_target

    grads_w = NetGradients.zeros_like(n_w)
    grads_a = NetGradients.zeros_like(n_a)
    for k in range(n_states):
        grad = policy_net.backward(nets[k], caches[k], cotangents[k])
        (grads_w if nets[k] is n_w else grads_a).add_(grad)
    return loss, grads_w, grads_a


def train(
    space: SearchSpace,
    evaluator: RewardEvaluator,
    cfg: TrainConfig,
    budget: Budget | None = None,
) -> tuple[FlowNetwork, FlowNetwork, RunLog]:
    """Run the full search loop; deterministic given cfg.seed and evaluator."""
    seed_w, seed_a, seed_rollout = np.random.SeedSequence(cfg.seed).spawn(3)
    n_w = policy_net.init(space.encoding_dim, cfg.hidden_dim,
                          len(space.wavelets), seed_w)
    n_a = policy_net.init(space.encoding_dim, cfg.hidden_dim,
                          len(space.activations), seed_a)
    adam_w = AdamState.for_network(n_w, cfg.learning_rate)
    adam_a = AdamState.for_network(n_a, cfg.learning_rate)
    rng = np.random.default_rng(seed_rollout)

    if evaluator.deterministic and not isinstance(evaluator, CachingEvaluator):
        evaluator = CachingEvaluator(evaluator)
    log = RunLog(space=space, cache_enabled=isinstance(evaluator, CachingEvaluator))

    max_skipped = max(1, int(0.1 * cfg.iterations))
    start = time.monotonic()
    for iteration in range(cfg.iterations):
        batch = []
        try:
            for _ in range(cfg.batch_size):
                traj = rollout(n_w, n_a, space, cfg.exploration_epsilon, rng)
                reward = evaluator.evaluate(decode(traj.terminal, space), budget)
                batch.append((traj, reward))
        except EvaluatorFailure:
            log.skipped_iterations += 1
            if log.skipped_iterations > max_skipped:
                raise EvaluatorFailure(
                    f"{log.skipped_iterations} skipped iterations exceed 10% of "
                    f"{cfg.iterations}; aborting run"
                )
            continue

        total_w = NetGradients.zeros_like(n_w)
        total_a = NetGradients.zeros_like(n_a)
        for traj, reward in batch:
            if reward < cfg.reward_floor:
                log.clamped_rewards += 1
            loss, g_w, g_a = trajectory_loss(
                n_w, n_a, traj, reward, space,
                mode=cfg.loss_mode, reward_floor=cfg.reward_floor,
            )
            total_w.add_(g_w)
            total_a.add_(g_a)
            log.record(iteration, decode(traj.terminal, space), reward, loss,
                       time.monotonic() - start)
        policy_net.adam_step(n_w, adam_w, total_w)
        policy_net.adam_step(n_a, adam_a, total_a)
    return n_w, n_a, log


def sample_terminals(
    n_w: FlowNetwork,
    n_a: FlowNetwork,
    space: SearchSpace,
    count: int,
    rng: np.random.Generator,
) -> list[tuple[ArchitectureSpec, float]]:
    """Epsilon-free rollouts; returns (architecture, frequency), sorted."""
    if count < 1:
        raise ValueError("count must be >= 1")
    counts: dict[ArchitectureSpec, int] = {}
    for _ in range(count):
        traj = rollout(n_w, n_a, space, epsilon=0.0, rng=rng)
        arch = decode(traj.terminal, space)
        counts[arch] = counts.get(arch, 0) + 1
    items = [(arch, c / count) for arch, c in counts.items()]
    items.sort(key=lambda pair: (-pair[1], str(pair[0])))
    return items


def best_observed(log: RunLog) -> ArchitectureSpec:
    """Highest observed reward; ties by visit count, then terminal lex order."""
    if not log.visits:
        raise FlowNasError("run log contains no evaluated trajectories")
    return min(
        log.visits,
        key=lambda arch: (
            -log.visits[arch].best_reward,
            -log.visits[arch].count,
            terminal_state(arch, log.space),
        ),
    )
