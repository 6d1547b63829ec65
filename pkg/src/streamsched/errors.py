"""Exception types shared across the package.

Everything derives from ValueError or RuntimeError so callers that do not
care about the distinctions can still catch broad categories.
"""


class TopologyError(ValueError):
    """An application graph violates a structural invariant.

    The ``kind`` attribute carries a stable machine-readable tag:
    ``cycle-detected``, ``dangling-edge``, ``zero-executors``,
    ``duplicate-component``, ``source-has-inbound`` or ``unreachable``.
    """

    def __init__(self, kind: str, message: str):
        super().__init__(f"{kind}: {message}")
        self.kind = kind


class DimensionMismatchError(ValueError):
    """Matrix or vector shapes disagree with the declared problem size."""


class UnstableSystemError(RuntimeError):
    """A simulated executor queue grew beyond the stability cap."""


class ArchitectureMismatchError(ValueError):
    """A checkpoint's layer shapes do not match the receiving network."""


class CorruptCheckpointError(ValueError):
    """A checkpoint file is unreadable or structurally invalid."""


class NonFiniteGradientError(ValueError):
    """A gradient passed to an optimizer step contains NaN or infinity."""


class KTooLargeError(ValueError):
    """More neighbors were requested than feasible actions exist."""


class SpaceTooLargeError(ValueError):
    """The full action space is too large to enumerate exhaustively."""


class InsufficientSamplesError(ValueError):
    """A replay buffer holds fewer samples than one mini-batch."""


class UnknownSchedulerError(ValueError):
    """A scheduler name is not present in the registry."""


class BadWindowError(ValueError):
    """A smoothing window is even, non-positive, or longer than the series."""


class ScenarioMismatchError(ValueError):
    """Two run summaries being compared came from different scenarios."""


class ConfigError(ValueError):
    """An experiment or scenario configuration is invalid."""
