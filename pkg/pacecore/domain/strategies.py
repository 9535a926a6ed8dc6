"""Agent bidding policies for the repeated mechanism."""

import logging
from abc import ABC, abstractmethod
from collections.abc import Callable
from dataclasses import dataclass, field
from enum import StrEnum, auto
from typing import ClassVar

import numpy as np
import numpy.typing as npt

from pacecore.domain.errors import ConfigurationError

__all__ = [
    "Adaptive",
    "PublicHistory",
    "Strategy",
    "StrategyKind",
    "TimeIndependentMap",
    "Truthful",
    "ValueScaling",
    "report",
    "value_scaling_profile",
]

logger = logging.getLogger(__name__)

type FloatArray = npt.NDArray[np.float64]
type BoolArray = npt.NDArray[np.bool_]
type Bid = tuple[FloatArray, BoolArray]


class StrategyKind(StrEnum):
    """Supported strategy families."""

    VALUE_SCALING = auto()
    TRUTHFUL = auto()
    TIME_INDEPENDENT_MAP = auto()
    ADAPTIVE = auto()


@dataclass(frozen=True, eq=False)
class PublicHistory:
    """Read-only view of every past round's reports and allocations.

    Arrays have shape (rounds, n, m); private values are never exposed.
    """

    reports: FloatArray
    unbounded: BoolArray
    allocations: BoolArray

    @classmethod
    def empty(cls, n: int, m: int) -> PublicHistory:
        """History before the first round."""
        return cls.view(
            np.zeros((0, n, m), dtype=np.float64),
            np.zeros((0, n, m), dtype=np.bool_),
            np.zeros((0, n, m), dtype=np.bool_),
            0,
        )

    @classmethod
    def view(cls, reports: FloatArray, unbounded: BoolArray, allocations: BoolArray, rounds: int) -> PublicHistory:
        """Expose the first ``rounds`` rows of engine buffers without copying."""
        parts = [reports[:rounds], unbounded[:rounds], allocations[:rounds]]
        for part in parts:
            part.flags.writeable = False
        return cls(*parts)

    def __len__(self) -> int:
        """Number of completed rounds."""
        return int(self.reports.shape[0])


class Strategy(ABC):
    """Maps an agent's private value vector and the public history to a report."""

    kind: ClassVar[StrategyKind]
    time_independent: ClassVar[bool] = True

    @abstractmethod
    def report_batch(self, values: FloatArray) -> Bid:
        """Reports for many rounds at once; only defined for time-independent strategies.

        Args:
            values: Private values of shape (rounds, m).

        Returns:
            Finite reports of shape (rounds, m), zero where unbounded, and the
            unbounded flags.
        """

    def report(self, value: FloatArray, history: PublicHistory) -> Bid:
        """Report for one round given the public history."""
        reports, unbounded = self.report_batch(np.asarray(value, dtype=np.float64)[None])
        return reports[0], unbounded[0]


@dataclass(frozen=True)
class ValueScaling(Strategy):
    """Report V / beta on every good; beta = 0 reports an unbounded value."""

    kind: ClassVar[StrategyKind] = StrategyKind.VALUE_SCALING
    beta: float

    def __post_init__(self) -> None:
        """Validate the scaling factor."""
        if not np.isfinite(self.beta) or self.beta < 0:
            msg = f"Value-scaling factor must be finite and nonnegative, got {self.beta}"
            raise ConfigurationError(msg)

    def report_batch(self, values: FloatArray) -> Bid:
        """Divide values by beta."""
        if self.beta == 0:
            return np.zeros_like(values), np.ones(values.shape, dtype=np.bool_)
        return values / self.beta, np.zeros(values.shape, dtype=np.bool_)


@dataclass(frozen=True)
class Truthful(Strategy):
    """Report the private value."""

    kind: ClassVar[StrategyKind] = StrategyKind.TRUTHFUL

    def report_batch(self, values: FloatArray) -> Bid:
        """Return the values unchanged."""
        return values.copy(), np.zeros(values.shape, dtype=np.bool_)


@dataclass(frozen=True)
class TimeIndependentMap(Strategy):
    """Piecewise-linear value-to-report lookup applied to every good.

    ``knots`` are increasing values in [0, 1] and ``reports`` the report at each
    knot; values between knots are interpolated, values outside are clamped.
    """

    kind: ClassVar[StrategyKind] = StrategyKind.TIME_INDEPENDENT_MAP
    knots: tuple[float, ...]
    reports: tuple[float, ...]

    def __post_init__(self) -> None:
        """Validate the lookup table."""
        if not self.knots or len(self.knots) != len(self.reports):
            msg = "Lookup needs matching, nonempty knot and report lists"
            raise ConfigurationError(msg)
        if any(later <= earlier for earlier, later in zip(self.knots, self.knots[1:], strict=False)):
            msg = "Lookup knots must be strictly increasing"
            raise ConfigurationError(msg)
        if not all(np.isfinite(r) and r >= 0 for r in self.reports):
            msg = "Lookup reports must be finite and nonnegative"
            raise ConfigurationError(msg)

    def report_batch(self, values: FloatArray) -> Bid:
        """Interpolate the table."""
        return np.interp(values, self.knots, self.reports), np.zeros(values.shape, dtype=np.bool_)


type ReportFunction = Callable[[PublicHistory, FloatArray], FloatArray]


@dataclass(frozen=True)
class Adaptive(Strategy):
    """Report computed from the full public history and the current value."""

    kind: ClassVar[StrategyKind] = StrategyKind.ADAPTIVE
    time_independent: ClassVar[bool] = False
    function: ReportFunction = field(compare=False)
    name: str = "adaptive"

    def report_batch(self, values: FloatArray) -> Bid:
        """Adaptive reports depend on history and cannot be batched."""
        msg = f"Strategy '{self.name}' depends on history and must be queried round by round"
        raise TypeError(msg)

    def report(self, value: FloatArray, history: PublicHistory) -> Bid:
        """Call the report function; the engine validates the result."""
        reports = np.asarray(self.function(history, value), dtype=np.float64)
        if reports.size == np.size(value):
            reports = reports.reshape(np.shape(value))
        return reports, np.zeros(reports.shape, dtype=np.bool_)


def report(strategy: Strategy, value: npt.ArrayLike, history: PublicHistory) -> Bid:
    """Query a strategy for one round's report vector and unbounded flags."""
    return strategy.report(np.asarray(value, dtype=np.float64), history)


def value_scaling_profile(beta: npt.ArrayLike) -> tuple[ValueScaling, ...]:
    """One value-scaling strategy per entry of a pacing vector."""
    return tuple(ValueScaling(float(b)) for b in np.asarray(beta, dtype=np.float64))
