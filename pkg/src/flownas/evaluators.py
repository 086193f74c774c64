"""Reward sources: in-process tables for verification, subprocess client for real trainers.

Every evaluator maps a terminal architecture to a positive scalar reward and
declares whether it is deterministic (enables reward caching) and safe to call
concurrently.  The external client speaks newline-delimited JSON over a child
process's stdin/stdout; the protocol is documented in the README.
"""

from __future__ import annotations

import json
import logging
import math
import queue
import subprocess
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass

from .errors import (
    ContractViolationError,
    EvaluatorFailure,
    ProtocolError,
    UnknownArchitectureError,
)
from .search_space import ArchitectureSpec, SearchSpace, terminal_state

logger = logging.getLogger(__name__)

PROTOCOL_VERSION = 1
DEFAULT_TIMEOUT_S = 600.0
DEFAULT_RETRIES = 1

# Relative tolerance for the reward == exp(-val_loss) cross-check.
REWARD_LOSS_RTOL = 1e-9


@dataclass(frozen=True)
class Budget:
    """Evaluation budget forwarded to the evaluator (proxy-training epochs)."""

    epochs: int | None = None

    def to_json(self) -> dict:
        return {} if self.epochs is None else {"epochs": self.epochs}


class RewardEvaluator(ABC):
    """Contract: evaluate() returns a finite reward in (0, inf)."""

    deterministic: bool = False
    concurrent_safe: bool = False

    @abstractmethod
    def evaluate(
        self, arch: ArchitectureSpec, budget: Budget | None = None
    ) -> float:
        ...

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class TabularEvaluator(RewardEvaluator):
    """Fixed architecture -> reward lookup; the verification workhorse."""

    deterministic = True
    concurrent_safe = True

    def __init__(self, table: dict[ArchitectureSpec, float]):
        for arch, reward in table.items():
            if not (math.isfinite(reward) and reward > 0.0):
                raise ValueError(f"reward for {arch} must be finite and > 0")
        self.table = dict(table)

    def evaluate(self, arch, budget=None):
        try:
            return self.table[arch]
        except KeyError:
            raise UnknownArchitectureError(str(arch)) from None


class SyntheticEvaluator(RewardEvaluator):
    """Product-form reward: one positive weight table per slot.

    reward(arch) = prod over slots of weights[slot][chosen index].  The induced
    reward-proportional distribution factorizes per slot, which makes exact
    mode masses trivial to compute in tests.
    """

    deterministic = True
    concurrent_safe = True

    def __init__(self, space: SearchSpace, slot_weights: list[list[float]]):
        if len(slot_weights) != space.n_slots:
            raise ValueError(
                f"need {space.n_slots} weight tables, got {len(slot_weights)}"
            )
        for slot, weights in enumerate(slot_weights):
            if len(weights) != space.slot_size(slot):
                raise ValueError(f"slot {slot}: table size mismatch")
            if any(w <= 0.0 for w in weights):
                raise ValueError(f"slot {slot}: weights must be positive")
        self.space = space
        self.slot_weights = [list(w) for w in slot_weights]

    def evaluate(self, arch, budget=None):
        state = terminal_state(arch, self.space)
        reward = 1.0
        for slot, idx in enumerate(state):
            reward *= self.slot_weights[slot][idx]
        return reward


class CachingEvaluator(RewardEvaluator):
    """Memoizes a deterministic evaluator by architecture."""

    def __init__(self, inner: RewardEvaluator):
        if not inner.deterministic:
            raise ValueError("caching requires a deterministic evaluator")
        self.inner = inner
        self.deterministic = True
        self.concurrent_safe = inner.concurrent_safe
        self._cache: dict[ArchitectureSpec, float] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def evaluate(self, arch, budget=None):
        with self._lock:
            if arch in self._cache:
                self.hits += 1
                return self._cache[arch]
        reward = self.inner.evaluate(arch, budget)
        with self._lock:
            self._cache[arch] = reward
            self.misses += 1
        return reward

    def close(self):
        self.inner.close()


def check_reward_consistency(reward: float, metrics: dict) -> None:
    """Cross-check reward == exp(-val_loss); catches unit mistakes early."""
    val_loss = metrics.get("val_loss")
    if val_loss is None:
        return
    expected = math.exp(-float(val_loss))
    if abs(reward - expected) > REWARD_LOSS_RTOL * max(abs(expected), 1e-300):
        raise ContractViolationError(
            f"reward {reward!r} != exp(-val_loss) = {expected!r}"
        )


class ExternalEvaluator(RewardEvaluator):
    """Client for an out-of-process evaluator spawned from a command line.

    Wire format: UTF-8, one JSON object per line, LF-terminated.  The child
    must emit a hello line first; requests carry an integer id that the
    response echoes.  Lines of type "log" are forwarded to the run log and
    skipped by the request/response state machine.
    """

    def __init__(
        self,
        command: list[str],
        budget: Budget | None = None,
        timeout: float = DEFAULT_TIMEOUT_S,
        retries: int = DEFAULT_RETRIES,
    ):
        self.command = list(command)
        self.budget = budget or Budget()
        self.timeout = timeout
        self.retries = retries
        self.log_lines: list[dict] = []
        self._proc: subprocess.Popen | None = None
        self._lines: queue.Queue = queue.Queue()
        self._reader: threading.Thread | None = None
        self._next_id = 0
        self._lock = threading.Lock()
        self.deterministic = False
        self.concurrent_safe = False
        self._start()

    # -- process lifecycle -------------------------------------------------

    def _start(self) -> None:
        self._proc = subprocess.Popen(
            self.command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            encoding="utf-8",
            bufsize=1,
        )
        self._lines = queue.Queue()
        self._reader = threading.Thread(
            target=self._read_loop, args=(self._proc,), daemon=True
        )
        self._reader.start()
        hello = self._next_message(self.timeout)
        if hello.get("type") != "hello" or hello.get("protocol") != PROTOCOL_VERSION:
            raise ProtocolError(f"bad handshake line: {hello!r}")
        self.deterministic = bool(hello.get("deterministic", False))
        self.concurrent_safe = bool(hello.get("concurrent_safe", False))

    def _read_loop(self, proc: subprocess.Popen) -> None:
        assert proc.stdout is not None
        for line in proc.stdout:
            self._lines.put(line)
        self._lines.put(None)  # EOF marker

    def _restart(self) -> None:
        self._kill()
        self._start()

    def _kill(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            self._proc.kill()
            self._proc.wait()
        self._proc = None

    def close(self) -> None:
        if self._proc is None:
            return
        try:
            if self._proc.poll() is None and self._proc.stdin is not None:
                self._proc.stdin.write(json.dumps({"type": "shutdown"}) + "\n")
                self._proc.stdin.flush()
                self._proc.wait(timeout=10.0)
        except (OSError, subprocess.TimeoutExpired):
            self._kill()
        finally:
            self._proc = None

    # -- protocol ----------------------------------------------------------

    def _next_message(self, timeout: float) -> dict:
        """Next non-log JSON object from the child, or raise."""
        deadline = timeout
        while True:
            try:
                raw = self._lines.get(timeout=deadline)
            except queue.Empty:
                raise TimeoutError(f"no response within {timeout} s") from None
            if raw is None:
                raise ProtocolError("evaluator closed its stdout")
            try:
                msg = json.loads(raw)
            except json.JSONDecodeError:
                raise ProtocolError(f"malformed line from evaluator: {raw!r}") from None
            if isinstance(msg, dict) and msg.get("type") == "log":
                self.log_lines.append(msg)
                logger.info("evaluator log: %s", msg)
                continue
            if not isinstance(msg, dict):
                raise ProtocolError(f"expected JSON object, got: {raw!r}")
            return msg

    def _round_trip(self, arch: ArchitectureSpec, budget: Budget) -> float:
        with self._lock:
            request_id = self._next_id
            self._next_id += 1
            request = {
                "id": request_id,
                "architecture": [
                    {"wavelet": w, "activation": a} for w, a in arch.blocks
                ],
                "budget": budget.to_json(),
            }
            assert self._proc is not None and self._proc.stdin is not None
            self._proc.stdin.write(json.dumps(request) + "\n")
            self._proc.stdin.flush()
            response = self._next_message(self.timeout)
        if response.get("id") != request_id:
            raise ProtocolError(
                f"response id {response.get('id')!r} does not match request {request_id}"
            )
        if "error" in response:
            raise EvaluatorFailure(f"evaluator error: {response['error']}")
        reward = response.get("reward")
        if not isinstance(reward, (int, float)) or not math.isfinite(reward):
            raise ProtocolError(f"missing or non-finite reward: {response!r}")
        if reward <= 0.0:
            raise ContractViolationError(f"reward must be > 0, got {reward}")
        metrics = response.get("metrics") or {}
        if not isinstance(metrics, dict):
            raise ProtocolError(f"metrics must be an object: {response!r}")
        check_reward_consistency(float(reward), metrics)
        return float(reward)

    def evaluate(self, arch, budget=None):
        budget = budget or self.budget
        attempts = self.retries + 1
        last_error: Exception | None = None
        for attempt in range(attempts):
            try:
                return self._round_trip(arch, budget)
            except TimeoutError as exc:
                last_error = exc
                logger.warning(
                    "evaluator timeout (attempt %d/%d), restarting", attempt + 1, attempts
                )
                if attempt + 1 < attempts:
                    self._restart()
        raise EvaluatorFailure(f"evaluator failed after {attempts} attempts: {last_error}")
