"""Randomized probes of the regularity axioms a mechanism must satisfy.

Each probe draws batches of report profiles, evaluates the raw mechanism (without
the in-line invariant enforcement) and reports the first profile that breaks the
axiom. A found counterexample is a result, not an error.
"""

import logging
from collections.abc import Callable
from dataclasses import dataclass
from enum import StrEnum

import numpy as np
import numpy.typing as npt

from pacecore.domain.costs import CostFunction, CostKind, ZeroOneSingleGood
from pacecore.domain.mechanisms import BatchOutcome, MechanismKind, allocation_masks, mechanism_for
from pacecore.domain.parallel import map_tasks
from pacecore.domain.randomness import substream

__all__ = ["Axiom", "ProbeReport", "ProbeWitness", "regularity_probe"]

logger = logging.getLogger(__name__)

type FloatArray = npt.NDArray[np.float64]
type BoolArray = npt.NDArray[np.bool_]

_TOLERANCE = 1e-9
_REPORT_UPPER = 1.25
_GRID_SHARE = 0.5
_TRIALS_PER_CHUNK = 2048
_IC_TRIALS_PER_CHUNK = 128
_MISREPORT_LEVELS = 31
_MISREPORT_LEVELS_MULTI = 7


class Axiom(StrEnum):
    """Probed properties of a one-shot mechanism."""

    IR = "IR"
    CC = "CC"
    MT1 = "MT1"
    MT2 = "MT2"
    MT3 = "MT3"
    MT4 = "MT4"
    MT5 = "MT5"
    CS = "CS"
    PS = "PS"
    BP = "BP"
    ET = "ET"
    SA = "SA"
    IC = "IC"


@dataclass(frozen=True, kw_only=True, eq=False)
class ProbeWitness:
    """A report profile, its altered counterpart and what went wrong."""

    reports: FloatArray
    altered: FloatArray | None
    agent: int
    detail: str


@dataclass(frozen=True, kw_only=True, eq=False)
class ProbeReport:
    """Outcome of probing one axiom."""

    kind: MechanismKind
    axiom: Axiom
    trials: int
    witness: ProbeWitness | None = None

    @property
    def passed(self) -> bool:
        """Whether no counterexample was found."""
        return self.witness is None

    @property
    def status(self) -> str:
        """Either "pass" or "fail"."""
        return "pass" if self.passed else "fail"


@dataclass(frozen=True, kw_only=True)
class _Setting:
    kind: MechanismKind
    axiom: Axiom
    n: int
    m: int
    cost: CostFunction
    seed: int


type _Found = tuple[int, FloatArray, FloatArray | None, int, str] | None


def _run(setting: _Setting, values: FloatArray, unbounded: BoolArray | None = None) -> BatchOutcome:
    flags = np.zeros(values.shape, dtype=np.bool_) if unbounded is None else unbounded
    return mechanism_for(setting.kind).run_batch(
        values,
        flags,
        np.zeros(values.shape[0], dtype=np.int64),
        (setting.cost,),
    )


def _utilities(values: FloatArray, outcome: BatchOutcome) -> FloatArray:
    return (values * outcome.allocations).sum(axis=2) - outcome.payments


def _first(failed: BoolArray) -> int | None:
    hits = np.flatnonzero(failed)
    return int(hits[0]) if hits.size else None


def _grid_levels(n: int) -> FloatArray:
    return np.unique(np.concatenate([1.0 / np.arange(1, n + 1), np.linspace(0.0, _REPORT_UPPER, 11)]))


def _draw(rng: np.random.Generator, size: int, n: int, m: int, *, gridded: bool) -> FloatArray:
    values = rng.uniform(0.0, _REPORT_UPPER, size=(size, n, m))
    if gridded:
        levels = _grid_levels(n)
        snapped = levels[rng.integers(0, levels.size, size=values.shape)]
        values = np.where(rng.random(values.shape) < _GRID_SHARE, snapped, values)
    return values


def _with_row(values: FloatArray, agents: npt.NDArray[np.int64], rows: FloatArray) -> FloatArray:
    altered = values.copy()
    altered[np.arange(values.shape[0]), agents] = rows
    return altered


def _pick(matrix: FloatArray, agents: npt.NDArray[np.int64]) -> FloatArray:
    return matrix[np.arange(matrix.shape[0]), agents]


def _check_bounds(setting: _Setting, rng: np.random.Generator, size: int) -> _Found:
    values = _draw(rng, size, setting.n, setting.m, gridded=True)
    outcome = _run(setting, values)
    payments = outcome.payments
    served = outcome.allocations.any(axis=2)
    received = (values * outcome.allocations).sum(axis=2)
    match setting.axiom:
        case Axiom.IR:
            broken = (payments > received + _TOLERANCE) | (payments < -_TOLERANCE)
            broken |= ~served & (np.abs(payments) > _TOLERANCE)
            detail = "payment exceeds the reported value received"
        case Axiom.CC:
            incurred = setting.cost.evaluate_masks(allocation_masks(outcome.allocations), setting.n, setting.m)
            broken = (payments.sum(axis=1) < incurred - _TOLERANCE)[:, None]
            detail = "payments do not cover the allocation cost"
        case _:
            bound = mechanism_for(setting.kind).p_max(setting.n)
            broken = payments > bound + _TOLERANCE
            detail = f"payment exceeds the bound {bound}"
    row = _first(broken.any(axis=1))
    if row is None:
        return None
    return row, values[row], None, int(np.argmax(broken[row])), detail


def _check_monotone(setting: _Setting, rng: np.random.Generator, size: int) -> _Found:
    n, m = setting.n, setting.m
    values = _draw(rng, size, n, m, gridded=False)
    lowered = values * rng.random(values.shape)
    agents = rng.integers(0, n, size=size)
    base = _run(setting, values)
    axiom = setting.axiom
    if axiom in {Axiom.MT1, Axiom.MT3}:
        altered = lowered
        other = _run(setting, altered)
        if axiom is Axiom.MT1:
            grown = (other.allocations & ~base.allocations).any(axis=2)
            row = _first(grown.any(axis=1))
            detail = "lowering reports added goods to an agent"
            agent = None if row is None else int(np.argmax(grown[row]))
        else:
            worse = _utilities(values, base) < _utilities(altered, other) - _TOLERANCE
            row = _first(worse.any(axis=1))
            detail = "raising every report lowered an agent's utility"
            agent = None if row is None else int(np.argmax(worse[row]))
    else:
        altered = _with_row(values, agents, _pick(lowered, agents))
        other = _run(setting, altered)
        own_base = _pick(base.payments, agents)
        own_other = _pick(other.payments, agents)
        same_allocation = (base.allocations == other.allocations).all(axis=(1, 2))
        if axiom is Axiom.MT2:
            broken = own_base < own_other - _TOLERANCE
            detail = "lowering an own report raised the payment"
        elif axiom is Axiom.MT4:
            broken = (np.abs(own_base - own_other) <= _TOLERANCE) & ~same_allocation
            detail = "equal own payments with different allocations"
        else:
            own_same = (_pick(base.allocations, agents) == _pick(other.allocations, agents)).all(axis=1)
            broken = own_same & ~same_allocation
            detail = "equal own allocations with different allocations"
        row = _first(broken)
        agent = None if row is None else int(agents[row])
    if row is None or agent is None:
        return None
    return row, values[row], altered[row], agent, detail


def _check_sovereignty(setting: _Setting, rng: np.random.Generator, size: int) -> _Found:
    n, m = setting.n, setting.m
    values = _draw(rng, size, n, m, gridded=True)
    agents = rng.integers(0, n, size=size)
    goods = rng.integers(0, m, size=size)
    rows = np.arange(size)
    unbounded = np.zeros(values.shape, dtype=np.bool_)
    if setting.axiom is Axiom.CS:
        unbounded[rows, agents, goods] = True
        values = np.where(unbounded, 0.0, values)
        outcome = _run(setting, values, unbounded)
        detail = "an unbounded report was not served"
    else:
        values[rows, agents, goods] = 1.0 + rng.random(size) * (_REPORT_UPPER - 1.0)
        outcome = _run(setting, values)
        detail = "a report of at least one was not served"
    row = _first(~outcome.allocations[rows, agents, goods])
    if row is None:
        return None
    return row, values[row], None, int(agents[row]), detail


def _check_stability(setting: _Setting, rng: np.random.Generator, size: int) -> _Found:
    n, m = setting.n, setting.m
    values = _draw(rng, size, n, m, gridded=False)
    agents = rng.integers(0, n, size=size)
    truthful = _pick(values, agents)
    raised = _with_row(values, agents, truthful + rng.uniform(0.0, _REPORT_UPPER, size=(size, m)))
    base = _run(setting, values)
    other = _run(setting, raised)
    own_base = (truthful * _pick(base.allocations, agents)).sum(axis=1) - _pick(base.payments, agents)
    own_other = (truthful * _pick(other.allocations, agents)).sum(axis=1) - _pick(other.payments, agents)
    row = _first(own_base < own_other - _TOLERANCE)
    if row is None:
        return None
    return row, values[row], raised[row], int(agents[row]), "over-reporting raised the agent's utility"


def _check_equal_treatment(setting: _Setting, rng: np.random.Generator, size: int) -> _Found:
    n, m = setting.n, setting.m
    if n == 1:
        return None
    values = _draw(rng, size, n, m, gridded=True)
    rows = np.arange(size)
    first = rng.integers(0, n, size=size)
    second = (first + rng.integers(1, n, size=size)) % n
    values[rows, second] = values[rows, first]
    outcome = _run(setting, values)
    unequal = np.abs(outcome.payments[rows, first] - outcome.payments[rows, second]) > _TOLERANCE
    unequal |= (outcome.allocations[rows, first] != outcome.allocations[rows, second]).any(axis=1)
    row = _first(unequal)
    if row is None:
        return None
    return row, values[row], None, int(first[row]), f"agents {first[row]} and {second[row]} report alike but differ"


def _misreports(truthful: FloatArray, m: int) -> FloatArray:
    scaled = truthful[None, :] * np.linspace(0.0, 2.0, 21)[:, None]
    if m == 1:
        levels = np.linspace(0.0, _REPORT_UPPER, _MISREPORT_LEVELS)[:, None]
    else:
        axis = np.linspace(0.0, _REPORT_UPPER, _MISREPORT_LEVELS_MULTI)
        levels = np.stack(np.meshgrid(*([axis] * m), indexing="ij"), axis=-1).reshape(-1, m)
    return np.concatenate([scaled, levels])


def _check_incentives(setting: _Setting, rng: np.random.Generator, size: int) -> _Found:
    n, m = setting.n, setting.m
    values = _draw(rng, size, n, m, gridded=False)
    agents = rng.integers(0, n, size=size)
    base = _run(setting, values)
    honest = _pick(_utilities(values, base), agents)
    for row in range(size):
        agent = int(agents[row])
        truthful = values[row, agent]
        candidates = _misreports(truthful, m)
        lying = np.repeat(values[row][None], candidates.shape[0], axis=0)
        lying[:, agent] = candidates
        outcome = _run(setting, lying)
        gained = (truthful * outcome.allocations[:, agent]).sum(axis=1) - outcome.payments[:, agent]
        best = int(np.argmax(gained))
        if gained[best] > honest[row] + _TOLERANCE:
            gain = gained[best] - honest[row]
            return row, values[row], lying[best], agent, f"misreporting raised utility by {gain:.3g}"
    return None


_CHECKS: dict[Axiom, Callable[[_Setting, np.random.Generator, int], _Found]] = {
    Axiom.IR: _check_bounds,
    Axiom.CC: _check_bounds,
    Axiom.BP: _check_bounds,
    Axiom.MT1: _check_monotone,
    Axiom.MT2: _check_monotone,
    Axiom.MT3: _check_monotone,
    Axiom.MT4: _check_monotone,
    Axiom.MT5: _check_monotone,
    Axiom.CS: _check_sovereignty,
    Axiom.SA: _check_sovereignty,
    Axiom.PS: _check_stability,
    Axiom.ET: _check_equal_treatment,
    Axiom.IC: _check_incentives,
}


def _probe_chunk(task: tuple[_Setting, int, int]) -> _Found:
    setting, chunk, size = task
    rng = substream(setting.seed, "probe", list(Axiom).index(setting.axiom), chunk)
    return _CHECKS[setting.axiom](setting, rng, size)


def regularity_probe(
    kind: MechanismKind | str,
    axiom: Axiom | str,
    trials: int,
    *,
    n: int = 3,
    m: int = 1,
    cost: CostFunction | None = None,
    seed: int = 0,
    workers: int = 1,
) -> ProbeReport:
    """Probe one axiom on randomly drawn report profiles.

    Monotonicity, stability and incentive probes use continuous reports; the
    bound, sovereignty and equal-treatment probes also draw reports from a grid
    that contains every 1/k threshold.

    Args:
        kind: Mechanism to probe.
        axiom: Property to check.
        trials: Number of random profiles.
        n: Number of agents.
        m: Number of goods.
        cost: Cost function; defaults to the 0-1 single-good cost.
        seed: Seed of the "probe" substreams.
        workers: Number of worker processes.

    Returns:
        The probe report, with the first counterexample in trial order if any.
    """
    if trials < 1:
        msg = f"Probe needs at least one trial, got {trials}"
        raise ValueError(msg)
    kind = MechanismKind(kind)
    axiom = Axiom(axiom)
    cost = cost or ZeroOneSingleGood()
    mechanism_for(kind).check_compatible(n, m, (cost,))
    if axiom is Axiom.ET and (m != 1 or cost.kind is not CostKind.ZERO_ONE_SINGLE_GOOD):
        msg = "Equal treatment is probed for the single-good 0-1 cost only"
        raise ValueError(msg)
    setting = _Setting(kind=kind, axiom=axiom, n=n, m=m, cost=cost, seed=seed)
    per_chunk = _IC_TRIALS_PER_CHUNK if axiom is Axiom.IC else _TRIALS_PER_CHUNK
    tasks = [
        (setting, chunk, min(per_chunk, trials - start))
        for chunk, start in enumerate(range(0, trials, per_chunk))
    ]
    for found in map_tasks(_probe_chunk, tasks, workers):
        if found is not None:
            _, reports, altered, agent, detail = found
            logger.info("Probe %s on %s found a counterexample: %s", axiom, kind, detail)
            witness = ProbeWitness(reports=reports, altered=altered, agent=agent, detail=detail)
            return ProbeReport(kind=kind, axiom=axiom, trials=trials, witness=witness)
    logger.info("Probe %s on %s passed %d trials", axiom, kind, trials)
    return ProbeReport(kind=kind, axiom=axiom, trials=trials)
