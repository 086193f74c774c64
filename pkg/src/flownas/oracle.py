"""Exact ground truth for small spaces via backward induction.

On a tree the flow-consistency equations have a unique exact solution: the
flow of a terminal is its reward, and the flow of any other state is the sum
over its children.  The root flow is then the partition sum Z, and the target
sampling distribution is reward / Z per terminal.  These oracles are what the
learned policies are verified against.
"""

from __future__ import annotations

import numpy as np

from .errors import MismatchedSupportError
from .evaluators import RewardEvaluator
from .search_space import (
    ENUMERATION_CAP,
    SearchSpace,
    State,
    decode,
    enumerate_terminals,
)
from .trainer import FlowNetwork, rollout

BALANCE_RTOL = 1e-12


class ExactFlowTable:
    """State -> exact flow F*(s); F*(root) is the partition sum Z."""

    def __init__(self, space: SearchSpace, flows: dict[State, float]):
        self.space = space
        self.flows = flows

    @property
    def z(self) -> float:
        return self.flows[()]

    def policy(self, state: State) -> np.ndarray:
        """Exact action probabilities at a non-terminal state."""
        children = [
            self.flows[state + (a,)]
            for a in range(self.space.slot_size(len(state)))
        ]
        total = sum(children)
        return np.array(children) / total


def exact_flows(
    space: SearchSpace,
    evaluator: RewardEvaluator,
    cap: int = ENUMERATION_CAP,
) -> ExactFlowTable:
    """Backward induction from terminal rewards up to the root."""
    if not evaluator.deterministic:
        raise ValueError("exact flows require a deterministic evaluator")
    terminals = enumerate_terminals(space, cap)
    flows: dict[State, float] = {}
    for term in terminals:
        flows[term] = evaluator.evaluate(decode(term, space))
    # Collapse one slot at a time: parents of length k from children length k+1.
    for length in range(space.n_slots - 1, -1, -1):
        level: dict[State, float] = {}
        for state, flow in flows.items():
            if len(state) == length + 1:
                parent = state[:-1]
                level[parent] = level.get(parent, 0.0) + flow
        flows.update(level)
    table = ExactFlowTable(space, flows)
    _assert_balance(table)
    return table


def _assert_balance(table: ExactFlowTable) -> None:
    # Every non-terminal state must satisfy inflow = outflow exactly.
    for state, flow in table.flows.items():
        if len(state) == table.space.n_slots:
            continue
        out = sum(
            table.flows[state + (a,)]
            for a in range(table.space.slot_size(len(state)))
        )
        if abs(flow - out) > BALANCE_RTOL * max(abs(flow), 1.0):
            raise AssertionError(f"flow imbalance at {state}: {flow} vs {out}")


def exact_policy_distribution(table: ExactFlowTable) -> dict[State, float]:
    """Terminal -> reward-proportional probability R(x)/Z."""
    z = table.z
    if z <= 0.0:
        raise ValueError("total flow Z must be positive")
    return {
        state: flow / z
        for state, flow in table.flows.items()
        if len(state) == table.space.n_slots
    }


def empirical_distribution(
    n_w: FlowNetwork,
    n_a: FlowNetwork,
    space: SearchSpace,
    sample_count: int,
    rng: np.random.Generator,
    cap: int = ENUMERATION_CAP,
) -> dict[State, float]:
    """Frequencies over all terminals from epsilon-free rollouts.

    Unvisited terminals get frequency zero so the support matches the exact
    distribution's.
    """
    counts = {term: 0 for term in enumerate_terminals(space, cap)}
    for _ in range(sample_count):
        traj = rollout(n_w, n_a, space, epsilon=0.0, rng=rng)
        counts[traj.terminal] += 1
    return {term: c / sample_count for term, c in counts.items()}


def tv_distance(p: dict[State, float], q: dict[State, float]) -> float:
    """Total variation distance: half the L1 gap over a shared support."""
    if set(p) != set(q):
        raise MismatchedSupportError("distributions have different supports")
    return 0.5 * sum(abs(p[key] - q[key]) for key in p)


def oracle_report(
    space: SearchSpace,
    table: ExactFlowTable,
    empirical: dict[State, float] | None = None,
) -> dict:
    """Per-terminal (reward, exact probability, empirical frequency) + TV."""
    exact = exact_policy_distribution(table)
    rows = []
    for term in enumerate_terminals(space):
        row = {
            "architecture": str(decode(term, space)),
            "reward": table.flows[term],
            "exact_probability": exact[term],
        }
        if empirical is not None:
            row["empirical_frequency"] = empirical[term]
        rows.append(row)
    report = {"z": table.z, "terminals": rows}
    if empirical is not None:
        report["tv_distance"] = tv_distance(exact, empirical)
    return report
