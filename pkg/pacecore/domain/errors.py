"""Domain error types shared by the pacecore modules."""

__all__ = [
    "ConfigurationError",
    "KindMismatchError",
    "MechanismInvariantError",
    "SizeLimitError",
    "StrategyError",
    "ThinnedTraceError",
]


class ConfigurationError(ValueError):
    """Raised when an instance, distribution, cost or run configuration is invalid."""


class SizeLimitError(ConfigurationError):
    """Raised when an exhaustive enumeration would exceed its supported size."""

    def __init__(self, what: str, size: int, limit: int) -> None:
        """Initialize the error with size details.

        Args:
            what: Name of the quantity being enumerated.
            size: The requested size.
            limit: The largest supported size.
        """
        super().__init__(f"{what} of size {size} exceeds the supported limit of {limit}")
        self.what = what
        self.size = size
        self.limit = limit


class KindMismatchError(ConfigurationError):
    """Raised when a mechanism is used with an incompatible instance shape or cost family."""

    def __init__(self, mechanism: str, reason: str) -> None:
        """Initialize the error with the mechanism name and the violated restriction.

        Args:
            mechanism: Name of the mechanism kind.
            reason: Human readable restriction that was violated.
        """
        super().__init__(f"Mechanism '{mechanism}' cannot run here: {reason}")
        self.mechanism = mechanism
        self.reason = reason


class StrategyError(ValueError):
    """Raised when a strategy produces a report the engine cannot accept."""

    def __init__(self, agent: int, round_index: int, detail: str) -> None:
        """Initialize the error identifying the offending agent and round.

        Args:
            agent: Zero-based index of the agent whose strategy misbehaved.
            round_index: Zero-based round in which the report was produced.
            detail: Description of the invalid report.
        """
        super().__init__(f"Agent {agent} produced an invalid report in round {round_index}: {detail}")
        self.agent = agent
        self.round_index = round_index
        self.detail = detail


class ThinnedTraceError(ValueError):
    """Raised when an operation needs every round but the trace was thinned."""

    def __init__(self, stride: int) -> None:
        """Initialize the error with the thinning stride.

        Args:
            stride: The stride the trace was recorded with.
        """
        super().__init__(f"Trace was recorded with stride {stride}; an exact audit needs every round")
        self.stride = stride


class MechanismInvariantError(RuntimeError):
    """Raised when a mechanism outcome violates individual rationality, cost covering or bounded payments."""

    def __init__(self, axiom: str, detail: str) -> None:
        """Initialize the error with the violated axiom.

        Args:
            axiom: Short name of the violated property.
            detail: Description of the violation.
        """
        super().__init__(f"{axiom} violated: {detail}")
        self.axiom = axiom
        self.detail = detail
