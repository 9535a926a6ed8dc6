"""Submodular cost families over agent-good pairs and their validators.

An allocation is a subset of [n]×[m]. Throughout the package it is encoded as a
bitmask in which pair (i, k) occupies bit ``i * m + k``; cost functions are
evaluated on whole arrays of such masks at once.
"""

import functools
import logging
from abc import ABC, abstractmethod
from collections.abc import Iterable
from dataclasses import dataclass
from enum import StrEnum, auto
from typing import ClassVar, Self

import numpy as np
import numpy.typing as npt

from pacecore.domain.errors import ConfigurationError, SizeLimitError

__all__ = [
    "MAX_ENUMERATION_BITS",
    "MAX_TABLE_BITS",
    "Allocation",
    "ConcaveCardinality",
    "CostFunction",
    "CostKind",
    "ExplicitTable",
    "ItemCoverage",
    "ValidationReport",
    "ZeroOneSingleGood",
    "all_masks",
    "cost_table",
    "eval_cost",
    "mask_bits",
    "mask_sums",
    "validate_cost",
]

logger = logging.getLogger(__name__)

MAX_ENUMERATION_BITS = 20
MAX_TABLE_BITS = 16
_TOLERANCE = 1e-12

type MaskArray = npt.NDArray[np.int64]
type FloatArray = npt.NDArray[np.float64]


@dataclass(frozen=True, kw_only=True)
class Allocation:
    """Value object for a set of (agent, good) pairs."""

    n: int
    m: int
    mask: int = 0

    def __post_init__(self) -> None:
        """Validate the mask fits the [n]×[m] grid."""
        if self.n < 1 or self.m < 1:
            msg = "Allocation needs at least one agent and one good"
            raise ValueError(msg)
        if not 0 <= self.mask < (1 << (self.n * self.m)):
            msg = f"Mask {self.mask} does not fit {self.n} agents and {self.m} goods"
            raise ValueError(msg)

    @classmethod
    def from_pairs(cls, n: int, m: int, pairs: Iterable[tuple[int, int]]) -> Self:
        """Build an allocation from zero-based (agent, good) pairs."""
        mask = 0
        for agent, good in pairs:
            if not (0 <= agent < n and 0 <= good < m):
                msg = f"Pair ({agent}, {good}) is outside {n} agents and {m} goods"
                raise ValueError(msg)
            mask |= 1 << (agent * m + good)
        return cls(n=n, m=m, mask=mask)

    @classmethod
    def from_agents(cls, n: int, agents: Iterable[int]) -> Self:
        """Build a single-good allocation serving the given agents."""
        return cls.from_pairs(n, 1, ((agent, 0) for agent in agents))

    def pairs(self) -> tuple[tuple[int, int], ...]:
        """Return the allocated pairs in bit order."""
        return tuple(
            divmod(bit, self.m) for bit in range(self.n * self.m) if self.mask >> bit & 1
        )

    def goods_of(self, agent: int) -> frozenset[int]:
        """Return the goods allocated to one agent."""
        return frozenset(good for owner, good in self.pairs() if owner == agent)

    def agents(self) -> frozenset[int]:
        """Return the agents that receive at least one good."""
        return frozenset(agent for agent, _ in self.pairs())

    def __len__(self) -> int:
        """Return the number of allocated pairs."""
        return self.mask.bit_count()


class CostKind(StrEnum):
    """Supported cost families."""

    ZERO_ONE_SINGLE_GOOD = auto()
    ITEM_COVERAGE = auto()
    CONCAVE_CARDINALITY = auto()
    EXPLICIT_TABLE = auto()


class CostFunction(ABC):
    """Monotone, submodular, normalized set function on [n]×[m] with range in [0, 1]."""

    kind: ClassVar[CostKind]

    @abstractmethod
    def evaluate_masks(self, masks: MaskArray, n: int, m: int) -> FloatArray:
        """Evaluate the cost of every allocation mask in an array.

        Args:
            masks: Integer array of allocation bitmasks.
            n: Number of agents.
            m: Number of goods.

        Returns:
            Array of costs with the same shape as ``masks``.
        """

    def check_shape(self, n: int, m: int) -> None:
        """Raise ConfigurationError when the cost cannot be evaluated on [n]×[m]."""
        if n < 1 or m < 1:
            msg = f"Costs need at least one agent and one good, got n={n}, m={m}"
            raise ConfigurationError(msg)


@dataclass(frozen=True)
class ZeroOneSingleGood(CostFunction):
    """Cost one for any nonempty allocation."""

    kind: ClassVar[CostKind] = CostKind.ZERO_ONE_SINGLE_GOOD

    def evaluate_masks(self, masks: MaskArray, n: int, m: int) -> FloatArray:
        """Return the indicator of nonemptiness."""
        return (np.asarray(masks) != 0).astype(np.float64)


@dataclass(frozen=True)
class ItemCoverage(CostFunction):
    """Pay the weight of every good served to anyone, capped at ``cap``."""

    kind: ClassVar[CostKind] = CostKind.ITEM_COVERAGE
    weights: tuple[float, ...]
    cap: float = 1.0

    def __post_init__(self) -> None:
        """Validate weights and cap."""
        if not self.weights or any(not w > 0 for w in self.weights):
            msg = "Item coverage weights must be positive"
            raise ConfigurationError(msg)
        if not 0 < self.cap <= 1:
            msg = f"Item coverage cap must lie in (0, 1], got {self.cap}"
            raise ConfigurationError(msg)

    def check_shape(self, n: int, m: int) -> None:
        """Require one weight per good."""
        super().check_shape(n, m)
        if len(self.weights) != m:
            msg = f"Item coverage has {len(self.weights)} weights but the instance has {m} goods"
            raise ConfigurationError(msg)

    def evaluate_masks(self, masks: MaskArray, n: int, m: int) -> FloatArray:
        """Return min(cap, total weight of covered goods)."""
        masks = np.asarray(masks, dtype=np.int64)
        total = np.zeros(masks.shape, dtype=np.float64)
        for good, weight in enumerate(self.weights):
            column = sum(1 << (agent * m + good) for agent in range(n))
            total += weight * ((masks & column) != 0)
        return np.minimum(total, self.cap)


@dataclass(frozen=True)
class ConcaveCardinality(CostFunction):
    """Cost g(|A|) for a concave, strictly increasing step table g with g(0) = 0."""

    kind: ClassVar[CostKind] = CostKind.CONCAVE_CARDINALITY
    steps: tuple[float, ...]

    def __post_init__(self) -> None:
        """Validate that the table is normalized, increasing, concave and bounded."""
        table = self.steps
        if len(table) <= 1 or table[0] != 0:
            msg = "Cardinality table must start at g(0) = 0 and define g(1)"
            raise ConfigurationError(msg)
        increments = [b - a for a, b in zip(table, table[1:], strict=False)]
        if any(not step > 0 for step in increments):
            msg = "Cardinality table must be strictly increasing"
            raise ConfigurationError(msg)
        if any(later > earlier + _TOLERANCE for earlier, later in zip(increments, increments[1:], strict=False)):
            msg = "Cardinality table must be concave"
            raise ConfigurationError(msg)
        if table[-1] > 1:
            msg = "Cardinality table values must not exceed 1"
            raise ConfigurationError(msg)

    def check_shape(self, n: int, m: int) -> None:
        """Require a table entry for every possible allocation size."""
        super().check_shape(n, m)
        if len(self.steps) < n * m + 1:
            msg = f"Cardinality table covers sizes up to {len(self.steps) - 1} but allocations reach {n * m}"
            raise ConfigurationError(msg)

    def evaluate_masks(self, masks: MaskArray, n: int, m: int) -> FloatArray:
        """Look up g at the number of allocated pairs."""
        sizes = np.bitwise_count(np.asarray(masks, dtype=np.int64))
        return np.asarray(self.steps, dtype=np.float64)[sizes]


@dataclass(frozen=True)
class ExplicitTable(CostFunction):
    """Cost given by a full table indexed by allocation mask (tiny instances only)."""

    kind: ClassVar[CostKind] = CostKind.EXPLICIT_TABLE
    values: tuple[float, ...]

    def check_shape(self, n: int, m: int) -> None:
        """Require exactly 2^(n·m) entries and n·m within the table limit."""
        super().check_shape(n, m)
        if n * m > MAX_TABLE_BITS:
            raise SizeLimitError("explicit cost table", n * m, MAX_TABLE_BITS)
        if len(self.values) != 1 << (n * m):
            msg = f"Explicit cost table has {len(self.values)} entries, expected {1 << (n * m)}"
            raise ConfigurationError(msg)

    def evaluate_masks(self, masks: MaskArray, n: int, m: int) -> FloatArray:
        """Index the table."""
        return np.asarray(self.values, dtype=np.float64)[np.asarray(masks, dtype=np.int64)]


@functools.cache
def all_masks(bits: int) -> MaskArray:
    """Return every bitmask over ``bits`` positions in increasing order."""
    if bits > MAX_ENUMERATION_BITS:
        raise SizeLimitError("allocation enumeration", bits, MAX_ENUMERATION_BITS)
    masks = np.arange(1 << bits, dtype=np.int64)
    masks.setflags(write=False)
    return masks


@functools.cache
def mask_bits(bits: int) -> npt.NDArray[np.float64]:
    """Return the 0/1 membership matrix of shape (2^bits, bits) for every mask."""
    masks = all_masks(bits)
    matrix = ((masks[:, None] >> np.arange(bits, dtype=np.int64)) & 1).astype(np.float64)
    matrix.setflags(write=False)
    return matrix


def mask_sums(values: FloatArray) -> FloatArray:
    """Sum each row of a (rows, bits) array over every bitmask.

    The table is built one bit at a time, so every entry results from the same
    additions whatever the number of rows.

    Returns:
        Array of shape (rows, 2^bits).
    """
    rows, bits = values.shape
    if bits > MAX_ENUMERATION_BITS:
        raise SizeLimitError("allocation enumeration", bits, MAX_ENUMERATION_BITS)
    sums = np.zeros((rows, 1 << bits), dtype=np.float64)
    for bit in range(bits):
        width = 1 << bit
        sums[:, width : 2 * width] = sums[:, :width] + values[:, bit : bit + 1]
    return sums


@functools.cache
def cost_table(cost: CostFunction, n: int, m: int) -> FloatArray:
    """Return the cost of every allocation mask over [n]×[m].

    Raises:
        SizeLimitError: If n·m exceeds the enumeration limit.
    """
    cost.check_shape(n, m)
    table = np.asarray(cost.evaluate_masks(all_masks(n * m), n, m), dtype=np.float64)
    table.setflags(write=False)
    logger.debug("Built %s cost table over %d masks", cost.kind, table.size)
    return table


def eval_cost(cost: CostFunction, allocation: Allocation) -> float:
    """Evaluate a cost function on one allocation."""
    masks = np.asarray([allocation.mask], dtype=np.int64)
    return float(cost.evaluate_masks(masks, allocation.n, allocation.m)[0])


@dataclass(frozen=True, kw_only=True)
class ValidationReport:
    """Outcome of checking the cost axioms.

    ``witness`` holds the first violated pair (A, B): for submodularity the two
    sets whose union and intersection break the inequality, for monotonicity a
    set A and the single pair B whose addition lowers the cost.
    """

    passed: bool
    violation: str | None = None
    witness: tuple[Allocation, Allocation] | None = None
    detail: str = ""


def _failure(violation: str, n: int, m: int, first: int, second: int, detail: str) -> ValidationReport:
    logger.info("Cost validation failed on %s: %s", violation, detail)
    return ValidationReport(
        passed=False,
        violation=violation,
        witness=(Allocation(n=n, m=m, mask=first), Allocation(n=n, m=m, mask=second)),
        detail=detail,
    )


def validate_cost(cost: CostFunction, n: int, m: int) -> ValidationReport:
    """Check range, normalization, monotonicity and submodularity exhaustively.

    Submodularity is checked through its local form c(A+x) + c(A+y) >= c(A+x+y) + c(A),
    which is equivalent to the pairwise definition and far cheaper to enumerate.

    Args:
        cost: The cost function to validate.
        n: Number of agents.
        m: Number of goods.

    Returns:
        A report that passes or names the first violated axiom with its witness pair.

    Raises:
        ConfigurationError: If the cost does not fit the [n]×[m] shape.
        SizeLimitError: If an explicit table is requested beyond n·m = 16.
    """
    cost.check_shape(n, m)
    bits = n * m
    if bits > MAX_TABLE_BITS:
        # Exhaustive checks are out of reach; the parametric families hold by construction.
        logger.debug("Skipping exhaustive validation of %s for n*m=%d", cost.kind, bits)
        return ValidationReport(passed=True, detail="holds by construction")

    table = cost_table(cost, n, m)
    masks = all_masks(bits)

    outside = np.flatnonzero((table < -_TOLERANCE) | (table > 1 + _TOLERANCE))
    if outside.size:
        mask = int(masks[outside[0]])
        return _failure("range", n, m, mask, mask, f"c = {table[mask]} lies outside [0, 1]")

    if abs(table[0]) > _TOLERANCE:
        return _failure("normalized", n, m, 0, 0, f"c(empty) = {table[0]}")
    flat = np.flatnonzero(table[1:] <= _TOLERANCE)
    if flat.size:
        mask = int(flat[0]) + 1
        return _failure("normalized", n, m, mask, 0, f"nonempty allocation {mask} has cost {table[mask]}")

    for x in range(bits):
        without_x = masks[(masks >> x & 1) == 0]
        drops = np.flatnonzero(table[without_x | (1 << x)] < table[without_x] - _TOLERANCE)
        if drops.size:
            mask = int(without_x[drops[0]])
            return _failure("monotone", n, m, mask, 1 << x, f"adding pair bit {x} to {mask} lowers the cost")

    for x in range(bits):
        for y in range(x + 1, bits):
            base = masks[((masks >> x & 1) == 0) & ((masks >> y & 1) == 0)]
            lhs = table[base | (1 << x)] + table[base | (1 << y)]
            rhs = table[base | (1 << x) | (1 << y)] + table[base]
            broken = np.flatnonzero(lhs < rhs - _TOLERANCE)
            if broken.size:
                mask = int(base[broken[0]])
                return _failure(
                    "submodular",
                    n,
                    m,
                    mask | (1 << x),
                    mask | (1 << y),
                    f"c(A∪B) + c(A∩B) exceeds c(A) + c(B) by {float(rhs[broken[0]] - lhs[broken[0]]):.3g}",
                )

    logger.debug("Cost %s passed exhaustive validation over %d masks", cost.kind, masks.size)
    return ValidationReport(passed=True)
