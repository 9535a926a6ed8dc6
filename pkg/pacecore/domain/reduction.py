"""Budget-ledger engine that runs a monetary mechanism with artificial currency.

Every agent starts with a budget of share × horizon. Each round the engine samples
values, asks every strategy for a report, zeroes the reports of agents whose
budget fell below the mechanism's largest payment, runs the mechanism and debits
the payments. Budgets are kept in integer nano-units so ledger identities hold
exactly.
"""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from pacecore.domain.errors import MechanismInvariantError, StrategyError
from pacecore.domain.mechanisms import MechanismKind, allocation_masks, mechanism_for, run_batch
from pacecore.domain.model import Draws, Instance, sample_batch
from pacecore.domain.parallel import map_tasks
from pacecore.domain.randomness import substream
from pacecore.domain.strategies import PublicHistory, Strategy

__all__ = [
    "SCALE",
    "AgentSummary",
    "SimulationResult",
    "Trace",
    "feasibility_audit",
    "initial_budgets",
    "payment_units",
    "simulate",
    "simulate_replications",
    "summarize",
]

logger = logging.getLogger(__name__)

type FloatArray = npt.NDArray[np.float64]
type BoolArray = npt.NDArray[np.bool_]
type IntArray = npt.NDArray[np.int64]

SCALE = 10**9
_SEGMENT = 1 << 15


def payment_units(amount: float) -> int:
    """Largest-payment bound in nano-units, rounded up."""
    return math.ceil(amount * SCALE)


def initial_budgets(shares: Sequence[float], horizon: int) -> IntArray:
    """Starting budgets share × horizon in nano-units."""
    return np.asarray([round(share * horizon * SCALE) for share in shares], dtype=np.int64)


def _charge(payments: FloatArray, p_max_units: int) -> IntArray:
    return np.minimum(np.ceil(payments * SCALE), p_max_units).astype(np.int64)


@dataclass(frozen=True, kw_only=True, eq=False)
class Trace:
    """Columnar per-round record of a run.

    Rows are the retained rounds (every ``stride``-th, starting with the first);
    ``rounds`` holds their one-based indices. Reports are post-zeroing, and
    ``depleted`` marks agents whose budget was already below the largest payment
    when the round started.
    """

    rounds: IntArray
    values: FloatArray
    reports: FloatArray
    unbounded: BoolArray
    allocations: BoolArray
    payments: IntArray
    budgets_after: IntArray
    depleted: BoolArray
    cost_ids: IntArray
    costs: IntArray
    stride: int = 1

    def __len__(self) -> int:
        """Number of retained rounds."""
        return int(self.rounds.shape[0])

    @property
    def thinned(self) -> bool:
        """Whether some rounds were dropped."""
        return self.stride > 1


@dataclass(frozen=True, kw_only=True, eq=False)
class SimulationResult:
    """Outcome of one run: the trace plus aggregate utilities, spend and depletion."""

    kind: MechanismKind
    horizon: int
    seed: int
    replication: int
    p_max_units: int
    trace: Trace
    initial_budgets: IntArray
    final_budgets: IntArray
    total_cost_units: int
    utilities: FloatArray
    depletion_times: IntArray

    @property
    def total_cost(self) -> float:
        """Total cost of all allocations in currency units."""
        return self.total_cost_units / SCALE

    @property
    def spend(self) -> FloatArray:
        """Currency spent by each agent."""
        return (self.initial_budgets - self.final_budgets) / SCALE


@dataclass(frozen=True, kw_only=True)
class AgentSummary:
    """One row of the per-agent run summary."""

    agent: int
    share: float
    utility: float
    spend: float
    depletion_time: int


@dataclass(frozen=True, kw_only=True, eq=False)
class _Ledger:
    reports: FloatArray
    unbounded: BoolArray
    allocations: BoolArray
    payments: IntArray
    budgets_after: IntArray
    depleted: BoolArray


def _check_reports(reports: FloatArray, offset: int = 0) -> None:
    bad = ~np.isfinite(reports) | (reports < 0)
    if bad.any():
        round_index, agent, _ = np.argwhere(bad)[0]
        detail = f"report {reports[round_index, agent].tolist()} is negative or not finite"
        raise StrategyError(int(agent), int(round_index) + offset, detail)


def _ensure_depleted_pay_nothing(paid: IntArray, active: BoolArray, offset: int) -> None:
    if (paid[:, ~active] != 0).any():
        row = int(np.flatnonzero((paid[:, ~active] != 0).any(axis=1))[0])
        raise MechanismInvariantError("IR", f"a depleted agent was charged in round {offset + row}")


def _run_batched(
    instance: Instance,
    kind: MechanismKind,
    strategies: Sequence[Strategy],
    draws: Draws,
    budgets: IntArray,
    p_max_units: int,
) -> _Ledger:
    rounds, n, m = draws.values.shape
    reports = np.empty((rounds, n, m), dtype=np.float64)
    unbounded = np.empty((rounds, n, m), dtype=np.bool_)
    for agent, strategy in enumerate(strategies):
        reports[:, agent], unbounded[:, agent] = strategy.report_batch(draws.values[:, agent])
    _check_reports(np.where(unbounded, 0.0, reports))

    allocations = np.zeros((rounds, n, m), dtype=np.bool_)
    payments = np.zeros((rounds, n), dtype=np.int64)
    budgets_after = np.empty((rounds, n), dtype=np.int64)
    depleted = np.empty((rounds, n), dtype=np.bool_)
    active = budgets >= p_max_units
    start = 0
    while start < rounds:
        stop = min(rounds, start + _SEGMENT)
        gate = active[None, :, None]
        outcome = run_batch(
            kind,
            np.where(gate & ~unbounded[start:stop], reports[start:stop], 0.0),
            unbounded[start:stop] & gate,
            draws.cost_ids[start:stop],
            instance.costs,
        )
        paid = _charge(outcome.payments, p_max_units)
        _ensure_depleted_pay_nothing(paid, active, start)
        after = budgets - np.cumsum(paid, axis=0)
        crossed = np.flatnonzero(((after < p_max_units) & active).any(axis=1))
        kept = int(crossed[0]) + 1 if crossed.size else stop - start
        end = start + kept
        allocations[start:end] = outcome.allocations[:kept]
        payments[start:end] = paid[:kept]
        budgets_after[start:end] = after[:kept]
        depleted[start:end] = ~active
        budgets = after[kept - 1]
        active = budgets >= p_max_units
        if crossed.size:
            logger.debug("Active set changed after round %d: %s", end, active.tolist())
        start = end

    zeroed = depleted[:, :, None]
    return _Ledger(
        reports=np.where(zeroed | unbounded, 0.0, reports),
        unbounded=unbounded & ~zeroed,
        allocations=allocations,
        payments=payments,
        budgets_after=budgets_after,
        depleted=depleted,
    )


def _run_stepwise(
    instance: Instance,
    kind: MechanismKind,
    strategies: Sequence[Strategy],
    draws: Draws,
    budgets: IntArray,
    p_max_units: int,
) -> _Ledger:
    rounds, n, m = draws.values.shape
    reports = np.zeros((rounds, n, m), dtype=np.float64)
    unbounded = np.zeros((rounds, n, m), dtype=np.bool_)
    allocations = np.zeros((rounds, n, m), dtype=np.bool_)
    payments = np.zeros((rounds, n), dtype=np.int64)
    budgets_after = np.empty((rounds, n), dtype=np.int64)
    depleted = np.empty((rounds, n), dtype=np.bool_)
    for t in range(rounds):
        history = PublicHistory.view(reports, unbounded, allocations, t)
        active = budgets >= p_max_units
        row = np.zeros((n, m), dtype=np.float64)
        flags = np.zeros((n, m), dtype=np.bool_)
        for agent, strategy in enumerate(strategies):
            bid, infinite = strategy.report(draws.values[t, agent], history)
            if np.shape(bid) != (m,):
                detail = f"report {np.asarray(bid).tolist()} does not hold one value per good ({m})"
                raise StrategyError(agent, t, detail)
            bid = np.where(infinite, 0.0, bid)
            if not np.all(np.isfinite(bid)) or np.any(bid < 0):
                raise StrategyError(agent, t, f"report {bid.tolist()} is negative or not finite")
            if active[agent]:
                row[agent], flags[agent] = bid, infinite
        outcome = run_batch(kind, row[None], flags[None], draws.cost_ids[t : t + 1], instance.costs)
        paid = _charge(outcome.payments, p_max_units)
        _ensure_depleted_pay_nothing(paid, active, t)
        budgets = budgets - paid[0]
        reports[t], unbounded[t] = row, flags
        allocations[t] = outcome.allocations[0]
        payments[t] = paid[0]
        budgets_after[t] = budgets
        depleted[t] = ~active
    return _Ledger(
        reports=reports,
        unbounded=unbounded,
        allocations=allocations,
        payments=payments,
        budgets_after=budgets_after,
        depleted=depleted,
    )


def _depletion_times(budgets_after: IntArray, initial: IntArray, p_max_units: int) -> IntArray:
    rounds, n = budgets_after.shape
    times = np.full(n, rounds, dtype=np.int64)
    below = budgets_after < p_max_units
    for agent in range(n):
        if initial[agent] < p_max_units:
            times[agent] = 0
        elif below[:, agent].any():
            times[agent] = int(np.argmax(below[:, agent])) + 1
    return times


def simulate(
    instance: Instance,
    kind: MechanismKind | str,
    strategies: Sequence[Strategy],
    *,
    seed: int | None = None,
    replication: int = 0,
    stride: int = 1,
) -> SimulationResult:
    """Run the repeated mechanism for the instance's horizon.

    All rounds are drawn up front from the replication's "sampling" substream, so
    the same seed, replication and strategies give a bit-identical trace whether
    the batched or the stepwise engine runs. The batched engine serves profiles of
    time-independent strategies; any adaptive strategy selects the stepwise one.

    Args:
        instance: The repeated allocation problem.
        kind: Mechanism run every round.
        strategies: One strategy per agent.
        seed: Run seed; defaults to the instance seed.
        replication: Index of the independent replication.
        stride: Keep every ``stride``-th round in the trace.

    Returns:
        The run's trace, utilities, spend and depletion times.

    Raises:
        ConfigurationError: If the strategies or stride do not fit the instance.
        KindMismatchError: If the mechanism cannot handle the instance's costs.
        StrategyError: If a strategy reports a negative or non-finite value.
    """
    kind = MechanismKind(kind)
    if len(strategies) != instance.n:
        msg = f"Got {len(strategies)} strategies for {instance.n} agents"
        raise ValueError(msg)
    if stride < 1:
        msg = f"Trace stride must be positive, got {stride}"
        raise ValueError(msg)
    mechanism = mechanism_for(kind)
    mechanism.check_compatible(instance.n, instance.m, instance.costs)
    seed = instance.seed if seed is None else seed
    p_max_units = payment_units(mechanism.p_max(instance.n))
    budgets = initial_budgets(instance.shares, instance.horizon)
    draws = sample_batch(instance.dist, substream(seed, "sampling", replication), instance.horizon)

    engine = _run_batched if all(s.time_independent for s in strategies) else _run_stepwise
    ledger = engine(instance, kind, strategies, draws, budgets, p_max_units)

    masks = allocation_masks(ledger.allocations)
    costs = np.zeros(instance.horizon, dtype=np.int64)
    for cost_id, cost in enumerate(instance.costs):
        rows = draws.cost_ids == cost_id
        costs[rows] = np.rint(cost.evaluate_masks(masks[rows], instance.n, instance.m) * SCALE).astype(np.int64)
    received = (draws.values * ledger.allocations).sum(axis=2)

    keep = np.arange(0, instance.horizon, stride)
    trace = Trace(
        rounds=keep + 1,
        values=draws.values[keep],
        reports=ledger.reports[keep],
        unbounded=ledger.unbounded[keep],
        allocations=ledger.allocations[keep],
        payments=ledger.payments[keep],
        budgets_after=ledger.budgets_after[keep],
        depleted=ledger.depleted[keep],
        cost_ids=draws.cost_ids[keep],
        costs=costs[keep],
        stride=stride,
    )
    result = SimulationResult(
        kind=kind,
        horizon=instance.horizon,
        seed=seed,
        replication=replication,
        p_max_units=p_max_units,
        trace=trace,
        initial_budgets=budgets,
        final_budgets=ledger.budgets_after[-1].copy(),
        total_cost_units=int(costs.sum()),
        utilities=received.sum(axis=0) / instance.horizon,
        depletion_times=_depletion_times(ledger.budgets_after, budgets, p_max_units),
    )
    logger.info(
        "Simulated %d rounds of %s (replication %d): total cost %.6g, depletion times %s",
        instance.horizon,
        kind,
        replication,
        result.total_cost,
        result.depletion_times.tolist(),
    )
    return result


type _ReplicationTask = tuple[Instance, MechanismKind, tuple[Strategy, ...], int, int, int]


def _replicate(task: _ReplicationTask) -> SimulationResult:
    instance, kind, strategies, seed, replication, stride = task
    return simulate(instance, kind, strategies, seed=seed, replication=replication, stride=stride)


def simulate_replications(
    instance: Instance,
    kind: MechanismKind | str,
    strategies: Sequence[Strategy],
    runs: int,
    *,
    seed: int | None = None,
    stride: int = 1,
    workers: int = 1,
) -> list[SimulationResult]:
    """Run independent replications, each on its own sampling substream."""
    kind = MechanismKind(kind)
    seed = instance.seed if seed is None else seed
    tasks = [(instance, kind, tuple(strategies), seed, replication, stride) for replication in range(runs)]
    return map_tasks(_replicate, tasks, workers)


def feasibility_audit(result: SimulationResult, instance: Instance) -> bool:
    """Independently re-check the ledger of a run.

    Verifies starting budgets, nonnegative budgets and payments, that depleted
    agents pay nothing, that each round's payments cover its cost and that total
    cost stays within share × horizon. On a full trace every per-round debit
    B[t] = B[t-1] - p[t] is replayed exactly.
    """
    trace = result.trace
    expected = initial_budgets(instance.shares, instance.horizon)
    checks = {
        "initial budgets": np.array_equal(result.initial_budgets, expected),
        "nonnegative budgets": bool((trace.budgets_after >= 0).all() and (result.final_budgets >= 0).all()),
        "nonnegative payments": bool((trace.payments >= 0).all()),
        "depleted agents pay nothing": bool((trace.payments[trace.depleted] == 0).all()),
        "payments cover costs": bool((trace.payments.sum(axis=1) >= trace.costs).all()),
        "total cost within budget": result.total_cost_units <= int(expected.sum()),
        "spend matches budgets": bool((result.initial_budgets - result.final_budgets >= 0).all()),
    }
    if not trace.thinned and len(trace):
        before = np.vstack([result.initial_budgets[None], trace.budgets_after[:-1]])
        checks["per-round debits"] = np.array_equal(trace.budgets_after, before - trace.payments)
        checks["depletion flags"] = np.array_equal(trace.depleted, before < result.p_max_units)
        checks["final budgets"] = np.array_equal(trace.budgets_after[-1], result.final_budgets)
        checks["total cost"] = int(trace.costs.sum()) == result.total_cost_units
    failed = [name for name, passed in checks.items() if not passed]
    if failed:
        logger.warning("Feasibility audit failed: %s", ", ".join(failed))
        return False
    logger.debug("Feasibility audit passed %d checks", len(checks))
    return True


def summarize(result: SimulationResult, shares: Sequence[float]) -> list[AgentSummary]:
    """Per-agent share, utility, spend and depletion time of a run."""
    spend = result.spend
    return [
        AgentSummary(
            agent=agent,
            share=float(share),
            utility=float(result.utilities[agent]),
            spend=float(spend[agent]),
            depletion_time=int(result.depletion_times[agent]),
        )
        for agent, share in enumerate(shares)
    ]
