"""One-shot monetary mechanisms behind a common interface.

Each mechanism maps a report matrix to an allocation and a payment vector. A
report entry may be flagged unbounded, meaning it exceeds every threshold; such
entries never enter arithmetic, they only force inclusion.
"""

import functools
import itertools
import logging
import math
from abc import ABC, abstractmethod
from collections.abc import Sequence
from dataclasses import dataclass
from enum import StrEnum, auto
from typing import ClassVar, Self

import numpy as np
import numpy.typing as npt
from scipy.special import comb

from pacecore.domain.costs import (
    MAX_ENUMERATION_BITS,
    Allocation,
    CostFunction,
    CostKind,
    all_masks,
    cost_table,
    mask_sums,
)
from pacecore.domain.errors import KindMismatchError, MechanismInvariantError, SizeLimitError

__all__ = [
    "BatchOutcome",
    "Mechanism",
    "MechanismKind",
    "MechanismOutcome",
    "Moulin",
    "Potential",
    "Proportional",
    "Reports",
    "allocation_masks",
    "harmonic_number",
    "mechanism_for",
    "p_max",
    "potential_table",
    "potential_value",
    "run_batch",
    "run_mechanism",
]

logger = logging.getLogger(__name__)

type FloatArray = npt.NDArray[np.float64]
type BoolArray = npt.NDArray[np.bool_]

_INVARIANT_TOLERANCE = 1e-9
_MATRIX_DIMS = 2
_TIE_TOLERANCE = 1e-12
_INFEASIBLE = -1e300
# Upper bound on batch rows times enumerated masks held in memory at once.
_CHUNK_CELLS = 1 << 22


def harmonic_number(n: int) -> float:
    """Return H_n = 1 + 1/2 + ... + 1/n."""
    return math.fsum(1 / j for j in range(1, n + 1))


class MechanismKind(StrEnum):
    """Supported one-shot mechanisms."""

    PROPORTIONAL = auto()
    MOULIN = auto()
    POTENTIAL = auto()


@dataclass(frozen=True, kw_only=True, eq=False)
class Reports:
    """Report matrix of shape (n, m) with per-entry unbounded flags."""

    values: FloatArray
    unbounded: BoolArray

    def __post_init__(self) -> None:
        """Validate and freeze the arrays; unbounded entries carry value 0."""
        values = np.array(self.values, dtype=np.float64, ndmin=2)
        unbounded = np.array(self.unbounded, dtype=np.bool_, ndmin=2)
        if values.ndim != _MATRIX_DIMS or unbounded.shape != values.shape:
            msg = f"Reports need matching (n, m) matrices, got {values.shape} and {unbounded.shape}"
            raise ValueError(msg)
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            msg = "Reports must be finite and nonnegative"
            raise ValueError(msg)
        values[unbounded] = 0.0
        values.setflags(write=False)
        unbounded.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "unbounded", unbounded)

    @classmethod
    def of(cls, values: npt.ArrayLike, unbounded: npt.ArrayLike | None = None) -> Self:
        """Build reports from a matrix (or a vector for the single-good case)."""
        matrix = np.asarray(values, dtype=np.float64)
        if matrix.ndim == 1:
            matrix = matrix[:, None]
        flags = np.zeros(matrix.shape, dtype=np.bool_) if unbounded is None else np.asarray(unbounded, dtype=np.bool_)
        if flags.ndim == 1:
            flags = flags[:, None]
        return cls(values=matrix, unbounded=flags)

    @property
    def n(self) -> int:
        """Number of agents."""
        return int(self.values.shape[0])

    @property
    def m(self) -> int:
        """Number of goods."""
        return int(self.values.shape[1])

    def with_agent(self, agent: int, values: npt.ArrayLike, *, unbounded: bool = False) -> Reports:
        """Return a copy in which one agent's row is replaced."""
        matrix = self.values.copy()
        flags = self.unbounded.copy()
        matrix[agent] = values
        flags[agent] = unbounded
        return Reports(values=matrix, unbounded=flags)


@dataclass(frozen=True, kw_only=True, eq=False)
class MechanismOutcome:
    """Allocation A* and payment vector p of one mechanism run."""

    allocation: Allocation
    payments: FloatArray

    def served(self, agent: int) -> bool:
        """Whether the agent receives at least one good."""
        return bool(self.allocation.goods_of(agent))


@dataclass(frozen=True, kw_only=True, eq=False)
class BatchOutcome:
    """Outcomes of a batch of independent runs.

    ``allocations`` has shape (batch, n, m) and ``payments`` shape (batch, n).
    """

    allocations: BoolArray
    payments: FloatArray

    def outcome(self, row: int) -> MechanismOutcome:
        """Materialize one row as a MechanismOutcome."""
        _, n, m = self.allocations.shape
        mask = int(allocation_masks(self.allocations[row : row + 1])[0])
        payments = self.payments[row].copy()
        payments.setflags(write=False)
        return MechanismOutcome(allocation=Allocation(n=n, m=m, mask=mask), payments=payments)


def allocation_masks(allocations: BoolArray) -> npt.NDArray[np.int64]:
    """Encode boolean allocations of shape (batch, n, m) as bitmasks."""
    batch = allocations.shape[0]
    flat = allocations.reshape(batch, -1).astype(np.int64)
    return (flat << np.arange(flat.shape[1], dtype=np.int64)).sum(axis=1)


class Mechanism(ABC):
    """A deterministic one-shot mechanism."""

    kind: ClassVar[MechanismKind]

    @abstractmethod
    def p_max(self, n: int) -> float:
        """Largest payment any agent can be charged."""

    @abstractmethod
    def check_compatible(self, n: int, m: int, costs: Sequence[CostFunction]) -> None:
        """Raise when the mechanism cannot run on this shape and cost family."""

    @abstractmethod
    def run_batch(
        self,
        values: FloatArray,
        unbounded: BoolArray,
        cost_ids: npt.NDArray[np.int64],
        costs: Sequence[CostFunction],
    ) -> BatchOutcome:
        """Run the mechanism on a batch of report matrices.

        Args:
            values: Finite reports of shape (batch, n, m); zero where unbounded.
            unbounded: Unbounded flags of shape (batch, n, m).
            cost_ids: Index into ``costs`` for every row.
            costs: The cost functions referenced by ``cost_ids``.

        Returns:
            Allocations and payments for every row.
        """

    def run(self, reports: Reports, cost: CostFunction) -> MechanismOutcome:
        """Run the mechanism once."""
        batch = self.run_batch(
            reports.values[None],
            reports.unbounded[None],
            np.zeros(1, dtype=np.int64),
            (cost,),
        )
        return batch.outcome(0)


class _SingleGoodMechanism(Mechanism, ABC):
    def p_max(self, n: int) -> float:
        return 1.0

    def check_compatible(self, n: int, m: int, costs: Sequence[CostFunction]) -> None:
        if m != 1:
            raise KindMismatchError(self.kind, f"needs a single good, got m={m}")
        if any(cost.kind is not CostKind.ZERO_ONE_SINGLE_GOOD for cost in costs):
            raise KindMismatchError(self.kind, "needs the 0-1 single-good cost")


class Proportional(_SingleGoodMechanism):
    """Serve everyone when total report reaches 1 and split the cost in proportion to reports.

    Unbounded reporters split the unit cost equally and everyone else pays nothing,
    the limit of the proportional rule as their reports grow together.
    """

    kind: ClassVar[MechanismKind] = MechanismKind.PROPORTIONAL

    def run_batch(
        self,
        values: FloatArray,
        unbounded: BoolArray,
        cost_ids: npt.NDArray[np.int64],
        costs: Sequence[CostFunction],
    ) -> BatchOutcome:
        """Apply the proportional rule row by row, vectorized."""
        reports = values[:, :, 0]
        flags = unbounded[:, :, 0]
        infinite = flags.sum(axis=1)
        total = reports.sum(axis=1)
        served = (infinite > 0) | (total >= 1)
        shares = np.where(
            (infinite > 0)[:, None],
            flags / np.maximum(infinite, 1)[:, None],
            reports / np.where(total > 0, total, 1.0)[:, None],
        )
        payments = np.where(served[:, None], shares, 0.0)
        allocations = np.broadcast_to(served[:, None, None], values.shape).copy()
        return BatchOutcome(allocations=allocations, payments=payments)


class Moulin(_SingleGoodMechanism):
    """Serve the largest group that can split the unit cost equally."""

    kind: ClassVar[MechanismKind] = MechanismKind.MOULIN

    def run(self, reports: Reports, cost: CostFunction) -> MechanismOutcome:
        """Iteratively drop every member whose report is below 1/|S| until stable."""
        n = reports.n
        values = reports.values[:, 0]
        flags = reports.unbounded[:, 0]
        members = set(range(n))
        while members:
            threshold = 1.0 / len(members)
            kept = {i for i in members if flags[i] or values[i] >= threshold}
            if kept == members:
                break
            members = kept
        payments = np.zeros(n, dtype=np.float64)
        if members:
            payments[sorted(members)] = 1.0 / len(members)
        payments.setflags(write=False)
        return MechanismOutcome(allocation=Allocation.from_agents(n, members), payments=payments)

    def run_batch(
        self,
        values: FloatArray,
        unbounded: BoolArray,
        cost_ids: npt.NDArray[np.int64],
        costs: Sequence[CostFunction],
    ) -> BatchOutcome:
        """Find the largest k with k members reporting at least 1/k, vectorized."""
        reports = values[:, :, 0]
        flags = unbounded[:, :, 0]
        batch, n = reports.shape
        rows = np.arange(batch)
        infinite = flags.sum(axis=1)
        # Unbounded entries sort to the end of the finite ranking.
        descending = -np.sort(-np.where(flags, -1.0, reports), axis=1)
        size = np.zeros(batch, dtype=np.int64)
        for k in range(1, n + 1):
            rank = np.clip(k - 1 - infinite, 0, n - 1)
            feasible = (infinite >= k) | (descending[rows, rank] >= 1.0 / k)
            size = np.where(feasible, k, size)
        threshold = 1.0 / np.maximum(size, 1)
        members = (size > 0)[:, None] & (flags | (reports >= threshold[:, None]))
        payments = np.where(members, threshold[:, None], 0.0)
        return BatchOutcome(allocations=members[:, :, None].copy(), payments=payments)


@functools.cache
def potential_table(cost: CostFunction, n: int, m: int) -> FloatArray:
    """Return P_c for every allocation mask over [n]×[m].

    P_c(A) sums, over every nonempty agent subset I, the cost of the part of A
    held by I weighted by 1/(|I|·C(n, |I|)).

    Raises:
        SizeLimitError: If n·m exceeds the enumeration limit.
    """
    table = cost_table(cost, n, m)
    masks = all_masks(n * m)
    rows = [sum(1 << (agent * m + good) for good in range(m)) for agent in range(n)]
    potential = np.zeros(masks.size, dtype=np.float64)
    for subset in range(1, 1 << n):
        members = [agent for agent in range(n) if subset >> agent & 1]
        weight = 1.0 / (len(members) * comb(n, len(members), exact=True))
        potential += weight * table[masks & sum(rows[agent] for agent in members)]
    potential.setflags(write=False)
    logger.debug("Built potential table for %s over n=%d, m=%d", cost.kind, n, m)
    return potential


def potential_value(cost: CostFunction, allocation: Allocation) -> float:
    """Evaluate P_c(A) by direct summation over nonempty agent subsets."""
    n, m = allocation.n, allocation.m
    if n > MAX_ENUMERATION_BITS:
        raise SizeLimitError("potential agent subsets", n, MAX_ENUMERATION_BITS)
    terms: list[float] = []
    for size in range(1, n + 1):
        weight = 1.0 / (size * comb(n, size, exact=True))
        for members in itertools.combinations(range(n), size):
            held = Allocation.from_pairs(n, m, ((i, k) for i, k in allocation.pairs() if i in members))
            terms.append(weight * float(cost.evaluate_masks(np.asarray([held.mask]), n, m)[0]))
    return math.fsum(terms)


class Potential(Mechanism):
    """Welfare-minus-potential maximizer with VCG payments.

    The chosen allocation maximizes total reported value minus P_c; among
    maximizers it has the most pairs, then the smallest bitmask.
    """

    kind: ClassVar[MechanismKind] = MechanismKind.POTENTIAL

    def p_max(self, n: int) -> float:
        """Payments are bounded by P_c(A*) <= H_n."""
        return harmonic_number(n)

    def check_compatible(self, n: int, m: int, costs: Sequence[CostFunction]) -> None:
        """Require the allocation space to be enumerable."""
        if n * m > MAX_ENUMERATION_BITS:
            raise SizeLimitError("potential allocation space", n * m, MAX_ENUMERATION_BITS)
        for cost in costs:
            cost.check_shape(n, m)

    def run_batch(
        self,
        values: FloatArray,
        unbounded: BoolArray,
        cost_ids: npt.NDArray[np.int64],
        costs: Sequence[CostFunction],
    ) -> BatchOutcome:
        """Enumerate every allocation for each row, grouped by cost and chunked."""
        batch, n, m = values.shape
        self.check_compatible(n, m, costs)
        allocations = np.zeros((batch, n, m), dtype=np.bool_)
        payments = np.zeros((batch, n), dtype=np.float64)
        chunk = max(1, _CHUNK_CELLS >> (n * m))
        for cost_id in np.unique(cost_ids):
            group = np.flatnonzero(cost_ids == cost_id)
            for start in range(0, group.size, chunk):
                rows = group[start : start + chunk]
                chosen, paid = self._solve(values[rows], unbounded[rows], costs[int(cost_id)])
                allocations[rows] = chosen
                payments[rows] = paid
        return BatchOutcome(allocations=allocations, payments=payments)

    def _solve(
        self,
        values: FloatArray,
        unbounded: BoolArray,
        cost: CostFunction,
    ) -> tuple[BoolArray, FloatArray]:
        batch, n, m = values.shape
        bits = n * m
        masks = all_masks(bits)
        sizes = np.bitwise_count(masks)
        flat = values.reshape(batch, bits)
        objective = mask_sums(flat) - potential_table(cost, n, m)
        required = allocation_masks(unbounded)
        feasible = (masks[None, :] & required[:, None]) == required[:, None]
        constrained = np.where(feasible, objective, _INFEASIBLE)

        best = constrained.max(axis=1)
        tolerance = _TIE_TOLERANCE * np.maximum(1.0, np.abs(best))
        ties = constrained >= (best - tolerance)[:, None]
        # Most pairs first, then the smallest mask.
        preference = np.where(ties, sizes[None, :] * masks.size + (masks.size - 1 - masks)[None, :], -1)
        chosen = masks[np.argmax(preference, axis=1)]
        chosen_bits = ((chosen[:, None] >> np.arange(bits, dtype=np.int64)) & 1).astype(np.bool_)
        realized = objective[np.arange(batch), chosen]

        payments = np.zeros((batch, n), dtype=np.float64)
        for agent in range(n):
            row = sum(1 << (agent * m + good) for good in range(m))
            others_required = required & ~row
            without_agent = ((masks & row) == 0)[None, :] & (
                (masks[None, :] & others_required[:, None]) == others_required[:, None]
            )
            alternative = np.where(without_agent, objective, _INFEASIBLE).max(axis=1)
            own = (flat[:, agent * m : (agent + 1) * m] * chosen_bits[:, agent * m : (agent + 1) * m]).sum(axis=1)
            served = chosen_bits[:, agent * m : (agent + 1) * m].any(axis=1)
            payments[:, agent] = np.where(served, alternative - (realized - own), 0.0)
        return chosen_bits.reshape(batch, n, m), payments


_MECHANISMS: dict[MechanismKind, Mechanism] = {
    MechanismKind.PROPORTIONAL: Proportional(),
    MechanismKind.MOULIN: Moulin(),
    MechanismKind.POTENTIAL: Potential(),
}


def mechanism_for(kind: MechanismKind | str) -> Mechanism:
    """Return the mechanism implementing a kind."""
    return _MECHANISMS[MechanismKind(kind)]


def p_max(kind: MechanismKind | str, n: int) -> float:
    """Per-agent payment bound: 1 for Proportional and Moulin, H_n for Potential."""
    return mechanism_for(kind).p_max(n)


def _enforce_invariants(
    mechanism: Mechanism,
    values: FloatArray,
    unbounded: BoolArray,
    cost_ids: npt.NDArray[np.int64],
    costs: Sequence[CostFunction],
    outcome: BatchOutcome,
) -> BatchOutcome:
    """Check IR, CC and BP, then snap payments into their exact bounds."""
    batch, n, m = values.shape
    allocations, payments = outcome.allocations, outcome.payments
    served = allocations.any(axis=2)
    received = (values * allocations).sum(axis=2)
    capped = (unbounded & allocations).any(axis=2)
    bound = mechanism.p_max(n)

    if np.any(payments < -_INVARIANT_TOLERANCE):
        raise MechanismInvariantError("IR", f"{mechanism.kind} charged a negative payment")
    if np.any(~served & (np.abs(payments) > _INVARIANT_TOLERANCE)):
        raise MechanismInvariantError("IR", f"{mechanism.kind} charged an agent that received nothing")
    if np.any(~capped & (payments > received + _INVARIANT_TOLERANCE)):
        raise MechanismInvariantError("IR", f"{mechanism.kind} charged more than the reported value received")
    if np.any(payments > bound + _INVARIANT_TOLERANCE):
        raise MechanismInvariantError("BP", f"{mechanism.kind} charged more than {bound}")

    incurred = np.zeros(batch, dtype=np.float64)
    masks = allocation_masks(allocations)
    for cost_id in np.unique(cost_ids):
        rows = cost_ids == cost_id
        incurred[rows] = costs[int(cost_id)].evaluate_masks(masks[rows], n, m)
    if np.any(payments.sum(axis=1) < incurred - _INVARIANT_TOLERANCE):
        raise MechanismInvariantError("CC", f"{mechanism.kind} payments do not cover the allocation cost")

    limit = np.where(capped, bound, np.minimum(received, bound))
    snapped = np.where(served, np.clip(payments, 0.0, limit), 0.0)
    return BatchOutcome(allocations=allocations, payments=snapped)


def run_batch(
    kind: MechanismKind | str,
    values: FloatArray,
    unbounded: BoolArray,
    cost_ids: npt.NDArray[np.int64],
    costs: Sequence[CostFunction],
) -> BatchOutcome:
    """Run a mechanism on a batch of report matrices with its invariants enforced.

    Args:
        kind: Which mechanism to run.
        values: Finite reports of shape (batch, n, m); ignored where unbounded.
        unbounded: Unbounded flags of shape (batch, n, m).
        cost_ids: Per-row index into ``costs``.
        costs: Cost functions.

    Returns:
        Allocations and payments for every row.

    Raises:
        KindMismatchError: If the mechanism cannot handle the shape or cost family.
        SizeLimitError: If the Potential enumeration would exceed n·m = 20.
        MechanismInvariantError: If an outcome breaks IR, CC or BP.
    """
    mechanism = mechanism_for(kind)
    _, n, m = values.shape
    mechanism.check_compatible(n, m, [costs[int(i)] for i in np.unique(cost_ids)])
    values = np.where(unbounded, 0.0, values)
    outcome = mechanism.run_batch(values, unbounded, cost_ids, costs)
    return _enforce_invariants(mechanism, values, unbounded, cost_ids, costs, outcome)


def run_mechanism(kind: MechanismKind | str, reports: Reports, cost: CostFunction) -> MechanismOutcome:
    """Run a mechanism once with its invariants enforced.

    Raises:
        KindMismatchError: If the mechanism cannot handle the shape or cost family.
        SizeLimitError: If the Potential enumeration would exceed n·m = 20.
        MechanismInvariantError: If the outcome breaks IR, CC or BP.
    """
    mechanism = mechanism_for(kind)
    mechanism.check_compatible(reports.n, reports.m, (cost,))
    outcome = mechanism.run(reports, cost)
    allocations = np.zeros((1, reports.n, reports.m), dtype=np.bool_)
    for agent, good in outcome.allocation.pairs():
        allocations[0, agent, good] = True
    checked = _enforce_invariants(
        mechanism,
        reports.values[None],
        reports.unbounded[None],
        np.zeros(1, dtype=np.int64),
        (cost,),
        BatchOutcome(allocations=allocations, payments=outcome.payments[None]),
    )
    return checked.outcome(0)
