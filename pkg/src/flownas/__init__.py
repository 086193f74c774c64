"""Generative-flow architecture search with reward-proportional sampling."""

__version__ = "0.1.0"

from .evaluators import (
    Budget,
    CachingEvaluator,
    ExternalEvaluator,
    RewardEvaluator,
    SyntheticEvaluator,
    TabularEvaluator,
)
from .oracle import (
    ExactFlowTable,
    empirical_distribution,
    exact_flows,
    exact_policy_distribution,
    tv_distance,
)
from .policy_net import AdamState, FlowNetwork
from .search_space import (
    ArchitectureSpec,
    SearchSpace,
    SlotKind,
    State,
    Trajectory,
    apply,
    decode,
    encode,
    enumerate_terminals,
    next_slot_kind,
    terminal_state,
)
from .trainer import (
    RunLog,
    TrainConfig,
    best_observed,
    rollout,
    sample_terminals,
    train,
    trajectory_loss,
)

__all__ = [
    "AdamState",
    "ArchitectureSpec",
    "Budget",
    "CachingEvaluator",
    "ExactFlowTable",
    "ExternalEvaluator",
    "FlowNetwork",
    "RewardEvaluator",
    "RunLog",
    "SearchSpace",
    "SlotKind",
    "State",
    "SyntheticEvaluator",
    "TabularEvaluator",
    "TrainConfig",
    "Trajectory",
    "apply",
    "best_observed",
    "decode",
    "empirical_distribution",
    "encode",
    "enumerate_terminals",
    "exact_flows",
    "exact_policy_distribution",
    "next_slot_kind",
    "rollout",
    "sample_terminals",
    "terminal_state",
    "train",
    "trajectory_loss",
    "tv_distance",
]
