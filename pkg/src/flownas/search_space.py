"""Alternating wavelet/activation decision tree and its state encoding.

A state is the tuple of slot indices chosen so far: even slots index into the
wavelet list, odd slots into the activation list.  The empty tuple is the root;
a state of length ``2 * n_blocks`` is terminal and decodes into an
:class:`ArchitectureSpec`.  Every state has exactly one parent (its length-1
prefix), so the decision process is a tree.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (
    EnumerationTooLargeError,
    InvalidActionError,
    InvalidStateError,
    NoActionsError,
)

# A partial or complete sequence of slot indices.
State = tuple[int, ...]

ENUMERATION_CAP = 10**6


class SlotKind(Enum):
    WAVELET = "wavelet"
    ACTIVATION = "activation"
    TERMINAL = "terminal"


@dataclass(frozen=True)
class SearchSpace:
    """The wavelet set, activation set, and block count defining the tree."""

    wavelets: tuple[str, ...]
    activations: tuple[str, ...]
    n_blocks: int

    def __post_init__(self):
        object.__setattr__(self, "wavelets", tuple(self.wavelets))
        object.__setattr__(self, "activations", tuple(self.activations))
        if not self.wavelets or not self.activations:
            raise ValueError("wavelet and activation lists must be non-empty")
        if len(set(self.wavelets)) != len(self.wavelets):
            raise ValueError("duplicate wavelet identifiers")
        if len(set(self.activations)) != len(self.activations):
            raise ValueError("duplicate activation identifiers")
        if self.n_blocks < 1:
            raise ValueError("n_blocks must be >= 1")

    @property
    def n_slots(self) -> int:
        return 2 * self.n_blocks

    @property
    def n_terminals(self) -> int:
        return (len(self.wavelets) * len(self.activations)) ** self.n_blocks

    @property
    def encoding_dim(self) -> int:
        return self.n_blocks * (len(self.wavelets) + len(self.activations))

    def slot_size(self, slot: int) -> int:
        """Number of choices at a given slot position."""
        return len(self.wavelets) if slot % 2 == 0 else len(self.activations)


@dataclass(frozen=True)
class ArchitectureSpec:
    """A complete architecture: one (wavelet, activation) pair per block."""

    blocks: tuple[tuple[str, str], ...]

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(tuple(b) for b in self.blocks))

    def __str__(self) -> str:
        return ",".join(f"{w}/{a}" for w, a in self.blocks)

    @classmethod
    def from_string(cls, text: str) -> "ArchitectureSpec":
        blocks = []
        for part in text.split(","):
            w, sep, a = part.partition("/")
            if not sep or not w or not a:
                raise ValueError(f"malformed architecture string: {text!r}")
            blocks.append((w, a))
        return cls(tuple(blocks))


@dataclass(frozen=True)
class Trajectory:
    """A complete path s_0 ... s_T with the actions that produced it."""

    states: tuple[State, ...]
    actions: tuple[int, ...]

    def __post_init__(self):
        if len(self.states) != len(self.actions) + 1:
            raise ValueError("trajectory needs one more state than actions")
        for prev, act, nxt in zip(self.states, self.actions, self.states[1:]):
            if nxt != prev + (act,):
                raise ValueError("states are not prefix-consistent with actions")

    @property
    def terminal(self) -> State:
        return self.states[-1]


def validate_state(state: State, space: SearchSpace) -> None:
    if len(state) > space.n_slots:
        raise InvalidStateError(
            f"state length {len(state)} exceeds {space.n_slots}"
        )
    for slot, idx in enumerate(state):
        if not 0 <= idx < space.slot_size(slot):
            raise InvalidStateError(f"slot {slot} index {idx} out of range")


def next_slot_kind(state: State, space: SearchSpace) -> SlotKind:
    """Which network chooses next: wavelet at even depth, activation at odd."""
    validate_state(state, space)
    if len(state) == space.n_slots:
        return SlotKind.TERMINAL
    return SlotKind.WAVELET if len(state) % 2 == 0 else SlotKind.ACTIVATION


def apply(state: State, action: int, space: SearchSpace) -> State:
    """Append one slot choice, returning the child state."""
    kind = next_slot_kind(state, space)
    if kind is SlotKind.TERMINAL:
        raise NoActionsError("terminal state has no actions")
    if not 0 <= action < space.slot_size(len(state)):
        raise InvalidActionError(
            f"action {action} out of range for {kind.value} slot"
        )
    return state + (action,)


def encode(state: State, space: SearchSpace) -> np.ndarray:
    """One-hot positional encoding, zero-padded to a fixed length.

    Slot k occupies a contiguous segment of width |W| (even k) or |A| (odd k);
    unfilled segments stay zero, so the encoding is injective over states.
    """
    validate_state(state, space)
    vec = np.zeros(space.encoding_dim, dtype=np.float64)
    offset = 0
    for slot in range(space.n_slots):
        width = space.slot_size(slot)
        if slot < len(state):
            vec[offset + state[slot]] = 1.0
        offset += width
    return vec


def enumerate_terminals(
    space: SearchSpace, cap: int = ENUMERATION_CAP
) -> list[State]:
    """All terminal states in lexicographic order over slot indices."""
    if space.n_terminals > cap:
        raise EnumerationTooLargeError(
            f"{space.n_terminals} terminals exceed cap {cap}"
        )
    ranges = [range(space.slot_size(slot)) for slot in range(space.n_slots)]
    return [tuple(combo) for combo in itertools.product(*ranges)]


def decode(terminal: State, space: SearchSpace) -> ArchitectureSpec:
    """Terminal state -> architecture (bijective)."""
    validate_state(terminal, space)
    if len(terminal) != space.n_slots:
        raise InvalidStateError("only terminal states decode to architectures")
    blocks = tuple(
        (space.wavelets[terminal[2 * b]], space.activations[terminal[2 * b + 1]])
        for b in range(space.n_blocks)
    )
    return ArchitectureSpec(blocks)


def terminal_state(arch: ArchitectureSpec, space: SearchSpace) -> State:
    """Architecture -> terminal state (inverse of :func:`decode`)."""
    if len(arch.blocks) != space.n_blocks:
        raise InvalidStateError(
            f"architecture has {len(arch.blocks)} blocks, space expects {space.n_blocks}"
        )
    state: list[int] = []
    for w, a in arch.blocks:
        try:
            state.append(space.wavelets.index(w))
            state.append(space.activations.index(a))
        except ValueError as exc:
            raise InvalidStateError(f"unknown identifier in {arch}") from exc
    return tuple(state)
