"""Exception hierarchy shared across the package."""


class FlowNasError(Exception):
    """Base class for all package errors."""


class InvalidStateError(FlowNasError):
    """State is malformed for its search space (bad length or slot index)."""


class NoActionsError(FlowNasError):
    """An action was applied to a terminal state."""


class InvalidActionError(FlowNasError):
    """Action index out of range for the current slot kind."""


class EnumerationTooLargeError(FlowNasError):
    """Terminal count exceeds the configured enumeration cap."""


class NonFiniteGradientError(FlowNasError):
    """A gradient contained NaN or Inf; the optimizer step was aborted."""


class UnknownArchitectureError(FlowNasError):
    """Tabular evaluator queried with an architecture not in its table."""


class EvaluatorFailure(FlowNasError):
    """External evaluator failed after exhausting retries."""


class ProtocolError(FlowNasError):
    """External evaluator sent a malformed or out-of-contract message."""


class ContractViolationError(FlowNasError):
    """Evaluator response violates the reward contract (e.g. reward <= 0)."""


class MismatchedSupportError(FlowNasError):
    """Two distributions were compared over different support sets."""


class CheckpointError(FlowNasError):
    """Checkpoint file is missing fields or fails integrity checks."""


class ConfigError(FlowNasError):
    """Run configuration failed schema validation."""

    def __init__(self, message: str, location: str = ""):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)
