"""Dead-weight loss and social cost of one-shot mechanisms."""

import logging
import math
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from pacecore.domain.costs import Allocation, CostFunction, CostKind, cost_table, eval_cost, mask_bits, mask_sums
from pacecore.domain.mechanisms import (
    MechanismKind,
    MechanismOutcome,
    Reports,
    harmonic_number,
    run_batch,
    run_mechanism,
)
from pacecore.domain.parallel import map_tasks
from pacecore.domain.randomness import substream

__all__ = [
    "DwlScan",
    "ScanGrid",
    "dwl",
    "dwl_batch",
    "dwl_forms",
    "dwl_sup_scan",
    "harmonic_profile",
    "payments_plus_excluded",
    "social_cost",
    "social_cost_ratio",
]

logger = logging.getLogger(__name__)

type FloatArray = npt.NDArray[np.float64]

_CHUNK_CELLS = 1 << 22
_SCAN_CHUNK = 8192


def _require_finite(reports: Reports) -> None:
    if reports.unbounded.any():
        msg = "Welfare measures need finite reports"
        raise ValueError(msg)


def _require_single_good(reports: Reports) -> None:
    if reports.m != 1:
        msg = f"This measure is defined for a single good, got m={reports.m}"
        raise ValueError(msg)


def dwl_forms(reports: Reports, outcome: MechanismOutcome) -> tuple[float, float]:
    """Return both algebraic forms of the single-good dead-weight loss.

    The first is first-best surplus minus realized surplus, the second is the
    excess of excluded value plus payments over the unit cost. They agree for any
    IR and CC outcome.
    """
    _require_finite(reports)
    _require_single_good(reports)
    values = reports.values[:, 0]
    served = np.asarray([outcome.served(agent) for agent in range(reports.n)])
    first_best = max(math.fsum(values) - 1.0, 0.0)
    realized = math.fsum(values[served] - outcome.payments[served])
    excess = math.fsum(values[~served]) + math.fsum(outcome.payments) - 1.0
    return first_best - realized, max(excess, 0.0)


def payments_plus_excluded(kind: MechanismKind | str, reports: Reports, cost: CostFunction) -> float:
    """Total payments plus the reported value of excluded agents (single good).

    Its supremum over reports exceeds the supremum dead-weight loss by exactly one.
    """
    _require_finite(reports)
    _require_single_good(reports)
    outcome = run_mechanism(kind, reports, cost)
    served = np.asarray([outcome.served(agent) for agent in range(reports.n)])
    return math.fsum(outcome.payments) + math.fsum(reports.values[~served, 0])


def _general_dwl(
    flat: FloatArray,
    realized: FloatArray,
    cost: CostFunction,
    n: int,
    m: int,
) -> FloatArray:
    bits = n * m
    costs = cost_table(cost, n, m)[1:]
    result = np.empty(flat.shape[0], dtype=np.float64)
    chunk = max(1, _CHUNK_CELLS >> bits)
    for start in range(0, flat.shape[0], chunk):
        rows = slice(start, start + chunk)
        welfare = mask_sums(flat[rows])[:, 1:]
        surplus = np.maximum(welfare - costs, 0.0)
        result[rows] = ((surplus - realized[rows, None]) / costs).max(axis=1)
    return result


def dwl_batch(kind: MechanismKind | str, values: FloatArray, cost: CostFunction) -> FloatArray:
    """Dead-weight loss of every report matrix in a (batch, n, m) array.

    The single-good 0-1 case uses the excluded-value form; every other cost
    enumerates all nonempty alternative allocations and normalizes by their cost.
    """
    batch, n, m = values.shape
    unbounded = np.zeros(values.shape, dtype=np.bool_)
    outcome = run_batch(kind, values, unbounded, np.zeros(batch, dtype=np.int64), (cost,))
    if m == 1 and cost.kind is CostKind.ZERO_ONE_SINGLE_GOOD:
        excluded = (values[:, :, 0] * ~outcome.allocations[:, :, 0]).sum(axis=1)
        return np.maximum(excluded + outcome.payments.sum(axis=1) - 1.0, 0.0)
    realized = (values * outcome.allocations).sum(axis=(1, 2)) - outcome.payments.sum(axis=1)
    return _general_dwl(values.reshape(batch, n * m), realized, cost, n, m)


def dwl(kind: MechanismKind | str, reports: Reports, cost: CostFunction) -> float:
    """Dead-weight loss of one mechanism run.

    Maximizes, over every nonempty alternative allocation A', the gap between the
    alternative's surplus (floored at zero) and the realized surplus, divided by
    c(A').

    Raises:
        ValueError: If any report is unbounded.
        SizeLimitError: If n·m exceeds the enumeration limit.
    """
    _require_finite(reports)
    outcome = run_mechanism(kind, reports, cost)
    realized = math.fsum(
        reports.values[agent, good] for agent, good in outcome.allocation.pairs()
    ) - math.fsum(outcome.payments)
    flat = reports.values.reshape(1, -1)
    return float(_general_dwl(flat, np.asarray([realized]), cost, reports.n, reports.m)[0])


def social_cost(reports: Reports, cost: CostFunction, allocation: Allocation) -> float:
    """Cost of the allocation plus the reported value of every excluded agent."""
    _require_finite(reports)
    _require_single_good(reports)
    served = allocation.agents()
    excluded = (reports.values[agent, 0] for agent in range(reports.n) if agent not in served)
    return eval_cost(cost, allocation) + math.fsum(excluded)


def social_cost_ratio(kind: MechanismKind | str, reports: Reports, cost: CostFunction) -> float:
    """Social cost of the mechanism's allocation relative to the best allocation.

    Returns 1 when both are zero and infinity when only the optimum is zero.
    """
    _require_finite(reports)
    _require_single_good(reports)
    n = reports.n
    outcome = run_mechanism(kind, reports, cost)
    excluded = (1.0 - mask_bits(n)) @ reports.values[:, 0]
    best = float((cost_table(cost, n, 1) + excluded).min())
    achieved = social_cost(reports, cost, outcome.allocation)
    if best <= 0:
        return 1.0 if achieved <= 0 else math.inf
    return achieved / best


def harmonic_profile(n: int, eps: float) -> FloatArray:
    """Reports (1, 1/2 - eps, ..., 1/n - eps) on which Moulin serves only the first agent."""
    profile = np.asarray([1.0, *(1.0 / j - eps for j in range(2, n + 1))], dtype=np.float64)
    return profile[:n]


@dataclass(frozen=True, kw_only=True)
class ScanGrid:
    """Search space for the supremum dead-weight loss.

    Reports range over [0, upper]. When the full grid with ``resolution`` steps per
    coordinate has at most ``max_grid_points`` profiles it is enumerated;
    otherwise ``samples`` random profiles are drawn, half snapped to the grid.
    """

    upper: float = 1.0
    resolution: int = 10
    samples: int = 10_000
    max_grid_points: int = 100_000
    witness_eps: float = 1e-6

    def __post_init__(self) -> None:
        """Validate the grid."""
        if not self.upper > 0 or self.resolution < 1 or self.samples < 1 or self.max_grid_points < 1:
            msg = "Scan grid needs a positive range, resolution, sample count and grid limit"
            raise ValueError(msg)


@dataclass(frozen=True, kw_only=True, eq=False)
class DwlScan:
    """Largest dead-weight loss found and the profile attaining it."""

    kind: MechanismKind
    sup_estimate: float
    witness: Reports
    profiles: int
    exhaustive: bool
    payments_plus_excluded: float | None = None
    upper_bound: float = 0.0


def _scan_profiles(n: int, m: int, grid: ScanGrid, seed: int) -> tuple[FloatArray, bool]:
    dimension = n * m
    levels = np.linspace(0.0, grid.upper, grid.resolution + 1)
    if (grid.resolution + 1) ** dimension <= grid.max_grid_points:
        mesh = np.meshgrid(*([levels] * dimension), indexing="ij")
        return np.stack(mesh, axis=-1).reshape(-1, n, m), True
    rng = substream(seed, "scan")
    continuous = rng.uniform(0.0, grid.upper, size=(grid.samples - grid.samples // 2, n, m))
    snapped = levels[rng.integers(0, grid.resolution + 1, size=(grid.samples // 2, n, m))]
    return np.concatenate([continuous, snapped]), False


type _ScanTask = tuple[MechanismKind, FloatArray, CostFunction]


def _scan_chunk(task: _ScanTask) -> tuple[int, float, float]:
    kind, values, cost = task
    losses = dwl_batch(kind, values, cost)
    best = int(np.argmax(losses))
    extra = math.nan
    if values.shape[2] == 1 and cost.kind is CostKind.ZERO_ONE_SINGLE_GOOD:
        outcome = run_batch(
            kind,
            values,
            np.zeros(values.shape, dtype=np.bool_),
            np.zeros(values.shape[0], dtype=np.int64),
            (cost,),
        )
        excluded = (values[:, :, 0] * ~outcome.allocations[:, :, 0]).sum(axis=1)
        extra = float((outcome.payments.sum(axis=1) + excluded).max())
    return best, float(losses[best]), extra


def dwl_sup_scan(
    kind: MechanismKind | str,
    n: int,
    m: int,
    cost: CostFunction,
    grid: ScanGrid | None = None,
    *,
    seed: int = 0,
    workers: int = 1,
) -> DwlScan:
    """Estimate the supremum dead-weight loss over reports by grid and witness search.

    The harmonic profile is always included for the single-good 0-1 cost, so
    Moulin and Potential reach within (n-1)·eps of H_n - 1.

    Args:
        kind: Mechanism to scan.
        n: Number of agents.
        m: Number of goods.
        cost: Cost function applied to every profile.
        grid: Search space; defaults to a 10-step grid on [0, 1].
        seed: Seed of the "scan" substream used when sampling.
        workers: Number of worker processes.

    Returns:
        The best loss found, the profile attaining it and, for the single-good 0-1
        cost, the largest payments plus excluded value.
    """
    kind = MechanismKind(kind)
    grid = grid or ScanGrid()
    profiles, exhaustive = _scan_profiles(n, m, grid, seed)
    if m == 1 and cost.kind is CostKind.ZERO_ONE_SINGLE_GOOD:
        profiles = np.concatenate([harmonic_profile(n, grid.witness_eps)[None, :, None], profiles])
    tasks = [(kind, profiles[start : start + _SCAN_CHUNK], cost) for start in range(0, len(profiles), _SCAN_CHUNK)]
    results = map_tasks(_scan_chunk, tasks, workers)

    best_chunk = max(range(len(results)), key=lambda index: (results[index][1], -index))
    best_row, sup_estimate, _ = results[best_chunk]
    witness = profiles[best_chunk * _SCAN_CHUNK + best_row]
    extras = [extra for _, _, extra in results if not math.isnan(extra)]
    upper_bound = 0.0 if kind is MechanismKind.PROPORTIONAL else harmonic_number(n) - 1.0
    logger.info("Scanned %d profiles for %s with n=%d, m=%d: sup DWL %.6g", len(profiles), kind, n, m, sup_estimate)
    return DwlScan(
        kind=kind,
        sup_estimate=sup_estimate,
        witness=Reports.of(witness),
        profiles=len(profiles),
        exhaustive=exhaustive,
        payments_plus_excluded=max(extras) if extras else None,
        upper_bound=upper_bound,
    )
