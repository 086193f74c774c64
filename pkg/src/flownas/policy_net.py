"""One-hidden-layer networks emitting per-action log-flows.

Two instances play the wavelet-choosing and activation-choosing roles.  The
nets output log-flows so that flows ``exp(output)`` are positive by
construction.  Forward, backward, and the Adam update are written out
explicitly: the trainer differentiates flow-matching losses through these nets
and the analytic gradients are checked against finite differences in the test
suite.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteGradientError

LEAKY_SLOPE = 0.01

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
DEFAULT_LEARNING_RATE = 1e-3
DEFAULT_HIDDEN_DIM = 16


@dataclass
class FlowNetwork:
    """Affine -> leaky ReLU -> affine, all float64."""

    w1: np.ndarray  # (hidden, input)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (output, hidden)
    b2: np.ndarray  # (output,)

    @property
    def input_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def output_dim(self) -> int:
        return self.w2.shape[0]

    def parameters(self) -> tuple[np.ndarray, ...]:
        return (self.w1, self.b1, self.w2, self.b2)

    def clone(self) -> "FlowNetwork":
        """Read-only snapshot for sharing across threads."""
        return copy.deepcopy(self)


@dataclass
class ForwardCache:
    x: np.ndarray
    pre_h: np.ndarray
    h: np.ndarray


@dataclass
class NetGradients:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    x: np.ndarray

    @classmethod
    def zeros_like(cls, net: FlowNetwork) -> "NetGradients":
        return cls(
            np.zeros_like(net.w1),
            np.zeros_like(net.b1),
            np.zeros_like(net.w2),
            np.zeros_like(net.b2),
            np.zeros(net.input_dim),
        )

    def add_(self, other: "NetGradients") -> None:
        self.w1 += other.w1
        self.b1 += other.b1
        self.w2 += other.w2
        self.b2 += other.b2
        self.x += other.x

    def params(self) -> tuple[np.ndarray, ...]:
        return (self.w1, self.b1, self.w2, self.b2)


def init(
    input_dim: int,
    hidden_dim: int,
    output_dim: int,
    seed: int | np.random.SeedSequence,
) -> FlowNetwork:
    """Uniform fan-in init for weights, zero biases, deterministic per seed."""
    if min(input_dim, hidden_dim, output_dim) < 1:
        raise ValueError("all dimensions must be positive")
    rng = np.random.default_rng(seed)
    bound1 = 1.0 / np.sqrt(input_dim)
    bound2 = 1.0 / np.sqrt(hidden_dim)
    return FlowNetwork(
        w1=rng.uniform(-bound1, bound1, size=(hidden_dim, input_dim)),
        b1=np.zeros(hidden_dim),
        w2=rng.uniform(-bound2, bound2, size=(output_dim, hidden_dim)),
        b2=np.zeros(output_dim),
    )


def forward(net: FlowNetwork, x: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    """Log-flows for every action available at the encoded state."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (net.input_dim,):
        raise ValueError(f"expected input shape ({net.input_dim},), got {x.shape}")
    pre_h = net.w1 @ x + net.b1
    h = np.where(pre_h >= 0.0, pre_h, LEAKY_SLOPE * pre_h)
    log_flows = net.w2 @ h + net.b2
    return log_flows, ForwardCache(x=x, pre_h=pre_h, h=h)


def backward(
    net: FlowNetwork, cache: ForwardCache, grad_log_flows: np.ndarray
) -> NetGradients:
    """Exact gradients of the forward map w.r.t. parameters and input.

    The leaky-ReLU subgradient at exactly zero takes the positive branch.
    """
    g = np.asarray(grad_log_flows, dtype=np.float64)
    if g.shape != (net.output_dim,):
        raise ValueError(
            f"expected cotangent shape ({net.output_dim},), got {g.shape}"
        )
    d_w2 = np.outer(g, cache.h)
    d_b2 = g.copy()
    d_h = net.w2.T @ g
    d_pre = d_h * np.where(cache.pre_h >= 0.0, 1.0, LEAKY_SLOPE)
    d_w1 = np.outer(d_pre, cache.x)
    d_b1 = d_pre
    d_x = net.w1.T @ d_pre
    return NetGradients(w1=d_w1, b1=d_b1, w2=d_w2, b2=d_b2, x=d_x)


@dataclass
class AdamState:
    """First/second moment accumulators, shaped like the net parameters."""

    learning_rate: float = DEFAULT_LEARNING_RATE
    t: int = 0
    m: tuple[np.ndarray, ...] = field(default_factory=tuple)
    v: tuple[np.ndarray, ...] = field(default_factory=tuple)

    @classmethod
    def for_network(
        cls, net: FlowNetwork, learning_rate: float = DEFAULT_LEARNING_RATE
    ) -> "AdamState":
        return cls(
            learning_rate=learning_rate,
            t=0,
            m=tuple(np.zeros_like(p) for p in net.parameters()),
            v=tuple(np.zeros_like(p) for p in net.parameters()),
        )


def adam_step(net: FlowNetwork, adam: AdamState, grads: NetGradients) -> None:
    """Standard bias-corrected Adam update, in place.

    Non-finite gradients abort the step before any state is touched.
    """
    grad_params = grads.params()
    for g in grad_params:
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradientError("non-finite gradient, step aborted")
    adam.t += 1
    bc1 = 1.0 - ADAM_BETA1**adam.t
    bc2 = 1.0 - ADAM_BETA2**adam.t
    for p, m, v, g in zip(net.parameters(), adam.m, adam.v, grad_params):
        m *= ADAM_BETA1
        m += (1.0 - ADAM_BETA1) * g
        v *= ADAM_BETA2
        v += (1.0 - ADAM_BETA2) * g * g
        p -= adam.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + ADAM_EPS)
