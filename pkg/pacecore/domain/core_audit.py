"""Approximate-core audits of value-scaling profiles.

Ex ante, a coalition S is ruled out by a weighted threshold policy: the policy
that per round maximizes Σ_{i∈S} w_i V_i minus z times the cost spends at least
the coalition's budget, yet the induced allocation already gives S at least
1/(1+γ) of its weighted value. Ex post, the same family of policies, run on the
realized rounds under the coalition's budget, searches for blocking allocations.
"""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import StrEnum, auto

import numpy as np
import numpy.typing as npt

from pacecore.domain.costs import CostFunction, CostKind, all_masks, cost_table, mask_sums
from pacecore.domain.equilibrium import PacingProfile, scaled_reports
from pacecore.domain.errors import ThinnedTraceError
from pacecore.domain.mechanisms import MechanismKind, run_batch
from pacecore.domain.model import Instance, sample_batch
from pacecore.domain.parallel import map_tasks
from pacecore.domain.randomness import substream
from pacecore.domain.reduction import SimulationResult

__all__ = [
    "DEFAULT_DELTA_GRID",
    "BlockingWitness",
    "CertificateStatus",
    "CoalitionVerdict",
    "CoreCertificate",
    "HalfSpaceWitness",
    "ThresholdPolicy",
    "audit_ex_post",
    "certify_ex_ante",
    "coalitions",
    "equilibrium_weights",
    "reference_scale",
]

logger = logging.getLogger(__name__)

type FloatArray = npt.NDArray[np.float64]
type BoolArray = npt.NDArray[np.bool_]
type IntArray = npt.NDArray[np.int64]
type Coalition = tuple[int, ...]

DEFAULT_DELTA_GRID = (0.0, 0.005, 0.01, 0.02, 0.05, 0.1)
EXACT_COALITION_LIMIT = 12
SAMPLED_COALITIONS = 256
DIRECTIONS_PER_MEMBER = 32
Z_SCORE = 3.0
_TINY_BETA = 1e-9
_TIE_TOLERANCE = 1e-12
_CHUNK_CELLS = 1 << 22
_BISECTION_STEPS = 200
_MAX_DOUBLINGS = 256


class CertificateStatus(StrEnum):
    """Overall outcome of a core audit."""

    CERTIFIED = auto()
    REFUTED = auto()
    INCONCLUSIVE = auto()


class CoalitionVerdict(StrEnum):
    """Outcome of the half-space test for one coalition."""

    PASSED = auto()
    VIOLATED = auto()
    INCONCLUSIVE = auto()


def equilibrium_weights(beta: npt.ArrayLike) -> FloatArray:
    """Weights 1/β_i of the equilibrium direction, with β_i = 0 treated as 1e-9."""
    return 1.0 / np.maximum(np.asarray(beta, dtype=np.float64), _TINY_BETA)


def reference_scale(n: int, horizon: int) -> float:
    """Order of the additive ex-post error, n·sqrt(log T / T)."""
    return n * math.sqrt(math.log(horizon) / horizon) if horizon > 1 else float(n)


def coalitions(n: int, rng: np.random.Generator | None = None) -> tuple[tuple[Coalition, ...], bool]:
    """Coalitions to audit and whether they are a sample.

    Every nonempty coalition is listed, in increasing bitmask order, for up to
    12 agents. Larger instances get the singletons, the grand coalition and 256
    random coalitions.
    """
    if n <= EXACT_COALITION_LIMIT:
        members = [tuple(i for i in range(n) if mask >> i & 1) for mask in range(1, 1 << n)]
        return tuple(members), False
    rng = rng or np.random.default_rng(0)
    chosen: dict[Coalition, None] = {(i,): None for i in range(n)}
    chosen[tuple(range(n))] = None
    while len(chosen) < n + 1 + SAMPLED_COALITIONS:
        picked = rng.random(n) < rng.random()
        if picked.any():
            chosen.setdefault(tuple(int(i) for i in np.flatnonzero(picked)), None)
    return tuple(chosen), True


class ThresholdPolicy:
    """Per-round allocations maximizing Σ_i w_i Σ_{k∈A_i} V_{i,k} - z·c(A).

    Ties between maximizers go to the allocation with the most pairs. For a
    single good under the 0-1 cost the maximizer is either nobody or everyone,
    decided by comparing the weighted value sum with z.
    """

    def __init__(
        self,
        values: FloatArray,
        cost_ids: IntArray,
        costs: Sequence[CostFunction],
        weights: FloatArray,
    ) -> None:
        """Prepare the policy family over a batch of rounds.

        Args:
            values: Realized or sampled values of shape (rounds, n, m).
            cost_ids: Per-round cost index.
            costs: Cost functions.
            weights: Nonnegative per-agent weights; zero outside the coalition.
        """
        self.values = values
        self.cost_ids = cost_ids
        self.costs = costs
        self.weights = np.asarray(weights, dtype=np.float64)
        self.rows, self.n, self.m = values.shape
        used = [costs[int(i)] for i in np.unique(cost_ids)]
        self.single_good = self.m == 1 and all(c.kind is CostKind.ZERO_ONE_SINGLE_GOOD for c in used)
        self._scores: FloatArray | None = None
        self._ranked: FloatArray | None = None

    @property
    def scores(self) -> FloatArray:
        """Weighted value sum of every round (single-good 0-1 cost only)."""
        if self._scores is None:
            self._scores = self.values[:, :, 0] @ self.weights
        return self._scores

    @property
    def ranked(self) -> FloatArray:
        """Scores in decreasing order."""
        if self._ranked is None:
            self._ranked = np.sort(self.scores)[::-1]
        return self._ranked

    def allocate(self, z: float) -> tuple[BoolArray, FloatArray]:
        """Allocations of shape (rounds, n, m) and their per-round costs at threshold z."""
        if self.single_good:
            served = self.scores >= z
            allocations = np.broadcast_to(served[:, None, None], self.values.shape).copy()
            return allocations, served.astype(np.float64)
        allocations = np.zeros(self.values.shape, dtype=np.bool_)
        incurred = np.zeros(self.rows, dtype=np.float64)
        if not math.isfinite(z):
            return allocations, incurred
        bits = self.n * self.m
        masks = all_masks(bits)
        sizes = np.bitwise_count(masks)
        per_bit = np.repeat(self.weights, self.m)
        chunk = max(1, _CHUNK_CELLS >> bits)
        for cost_id in np.unique(self.cost_ids):
            table = cost_table(self.costs[int(cost_id)], self.n, self.m)
            group = np.flatnonzero(self.cost_ids == cost_id)
            for start in range(0, group.size, chunk):
                rows = group[start : start + chunk]
                objective = mask_sums(self.values[rows].reshape(rows.size, bits) * per_bit) - z * table
                best = objective.max(axis=1)
                ties = objective >= (best - _TIE_TOLERANCE * np.maximum(1.0, np.abs(best)))[:, None]
                preference = np.where(ties, sizes[None, :] * masks.size + (masks.size - 1 - masks)[None, :], -1)
                chosen = masks[np.argmax(preference, axis=1)]
                allocations[rows] = ((chosen[:, None] >> np.arange(bits)) & 1).astype(np.bool_).reshape(
                    rows.size, self.n, self.m
                )
                incurred[rows] = table[chosen]
        return allocations, incurred

    def total_cost(self, z: float) -> float:
        """Summed cost over all rounds at threshold z; non-increasing in z."""
        return float(self.allocate(z)[1].sum())

    def within(self, budget: float) -> float:
        """Smallest threshold whose total cost is at most ``budget``."""
        if self.single_good:
            count = math.floor(budget + 1e-9)
            if count >= self.rows:
                return 0.0
            return float(np.nextafter(self.ranked[count], np.inf))
        if self.total_cost(0.0) <= budget:
            return 0.0
        low, high = 0.0, 1.0
        for _ in range(_MAX_DOUBLINGS):
            if self.total_cost(high) <= budget:
                break
            low, high = high, high * 2
        for _ in range(_BISECTION_STEPS):
            middle = (low + high) / 2
            if middle in {low, high}:
                break
            if self.total_cost(middle) <= budget:
                high = middle
            else:
                low = middle
        return high

    def reaching(self, target: float) -> float:
        """Largest threshold whose total cost is at least ``target``; 0 if none reaches it."""
        if target <= 0:
            return math.inf
        if self.single_good:
            count = math.ceil(target - 1e-9)
            return 0.0 if count > self.rows else float(self.ranked[count - 1])
        if self.total_cost(0.0) < target:
            return 0.0
        low, high = 0.0, 1.0
        for _ in range(_MAX_DOUBLINGS):
            if self.total_cost(high) < target:
                break
            low, high = high, high * 2
        for _ in range(_BISECTION_STEPS):
            middle = (low + high) / 2
            if middle in {low, high}:
                break
            if self.total_cost(middle) >= target:
                low = middle
            else:
                high = middle
        return low


def _received(values: FloatArray, allocations: BoolArray) -> FloatArray:
    return (values * allocations).sum(axis=2)


@dataclass(frozen=True, kw_only=True, eq=False)
class HalfSpaceWitness:
    """Half-space test of one coalition.

    ``lhs`` is (1+γ) times the coalition's weighted value under the induced
    policy and ``rhs`` its weighted value under the threshold policy whose
    per-round cost ``measure`` meets the coalition's share.
    """

    coalition: Coalition
    weights: FloatArray
    threshold: float
    measure: float
    target: float
    lhs: float
    rhs: float
    slack: float
    stderr: float
    verdict: CoalitionVerdict
    tie: bool = False


@dataclass(frozen=True, kw_only=True, eq=False)
class BlockingWitness:
    """A threshold policy for a coalition and the utilities it gives each member.

    Utilities are per round; ``stderr`` holds the standard errors of the
    member-wise margins when they are Monte Carlo estimates.
    """

    coalition: Coalition
    weights: FloatArray
    threshold: float
    cost: float
    budget: float
    baseline: FloatArray
    alternative: FloatArray
    stderr: FloatArray = field(default_factory=lambda: np.zeros(0))

    @property
    def ratios(self) -> FloatArray:
        """Alternative over baseline utility for each member."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.baseline > 0, self.alternative / self.baseline, np.inf)

    def margins(self, gamma: float) -> FloatArray:
        """Ũ_i - (1+γ)·U_i for each member."""
        return self.alternative - (1 + gamma) * self.baseline

    def delta_at(self, gamma: float) -> float:
        """Largest δ below which this policy blocks at γ."""
        return float(self.margins(gamma).min())

    def gamma_at(self, delta: float) -> float:
        """Largest γ below which this policy blocks at δ; ±inf when some member has zero baseline."""
        bounds = [
            (alternative - delta) / baseline - 1 if baseline > 0 else (math.inf if alternative > delta else -math.inf)
            for baseline, alternative in zip(self.baseline, self.alternative, strict=True)
        ]
        return min(bounds)


@dataclass(frozen=True, kw_only=True, eq=False)
class CoreCertificate:
    """Verdict of an ex-ante or ex-post core audit.

    Ex-ante audits fill ``witnesses`` with one half-space test per coalition.
    Ex-post audits fill ``candidates`` with each coalition's strongest blocking
    attempt, the measured δ*(γ), the frontier γ*(δ) and the reference scale.
    """

    status: CertificateStatus
    gamma: float
    witnesses: tuple[HalfSpaceWitness, ...] = ()
    candidates: tuple[BlockingWitness, ...] = ()
    blocking: BlockingWitness | None = None
    offending: Coalition | None = None
    delta: float | None = None
    delta_star: float | None = None
    frontier: tuple[tuple[float, float], ...] = ()
    reference_scale: float | None = None
    samples: int = 0
    sampled: bool = False
    tie: bool = False


def _directions(weights: FloatArray, members: Coalition, rng: np.random.Generator, count: int) -> list[FloatArray]:
    base = np.zeros_like(weights)
    base[list(members)] = weights[list(members)]
    directions = [base]
    for draw in rng.dirichlet(np.ones(len(members)), size=count):
        direction = np.zeros_like(weights)
        direction[list(members)] = draw
        directions.append(direction)
    return directions


@dataclass(frozen=True, kw_only=True, eq=False)
class _Sample:
    values: FloatArray
    cost_ids: IntArray
    costs: tuple[CostFunction, ...]
    induced: FloatArray


type _CertifyTask = tuple[_Sample, Coalition, FloatArray, float, float]


def _certify_coalition(task: _CertifyTask) -> HalfSpaceWitness:
    sample, members, weights, share, gamma = task
    rows = sample.values.shape[0]
    direction = np.zeros_like(weights)
    direction[list(members)] = weights[list(members)]
    bernoulli = min(max(share, 0.0), 1.0)
    target = share - Z_SCORE * math.sqrt(bernoulli * (1 - bernoulli) / rows)
    policy = ThresholdPolicy(sample.values, sample.cost_ids, sample.costs, direction)
    threshold = policy.reaching(target * rows)
    allocations, incurred = policy.allocate(threshold)
    lhs = (1 + gamma) * (sample.induced @ direction)
    rhs = _received(sample.values, allocations) @ direction
    gap = lhs - rhs
    slack = float(gap.mean())
    stderr = float(gap.std(ddof=1) / math.sqrt(rows)) if rows > 1 else math.inf
    tie = stderr == 0 and slack == 0
    if slack >= Z_SCORE * stderr:
        verdict = CoalitionVerdict.PASSED
    elif slack <= -Z_SCORE * stderr:
        verdict = CoalitionVerdict.VIOLATED
    else:
        verdict = CoalitionVerdict.INCONCLUSIVE
    logger.debug("Coalition %s: slack %.3g ± %.3g -> %s", members, slack, stderr, verdict)
    return HalfSpaceWitness(
        coalition=members,
        weights=direction,
        threshold=threshold,
        measure=float(incurred.mean()),
        target=share,
        lhs=float(lhs.mean()),
        rhs=float(rhs.mean()),
        slack=slack,
        stderr=stderr,
        verdict=verdict,
        tie=tie,
    )


def _ex_ante_candidate(sample: _Sample, members: Coalition, direction: FloatArray, share: float) -> BlockingWitness:
    rows = sample.values.shape[0]
    policy = ThresholdPolicy(sample.values, sample.cost_ids, sample.costs, direction)
    threshold = policy.within(share * rows)
    allocations, incurred = policy.allocate(threshold)
    received = _received(sample.values, allocations)[:, list(members)]
    return BlockingWitness(
        coalition=members,
        weights=direction,
        threshold=threshold,
        cost=float(incurred.mean()),
        budget=share,
        baseline=sample.induced[:, list(members)].mean(axis=0),
        alternative=received.mean(axis=0),
    )


def _ex_ante_blocks(sample: _Sample, witness: BlockingWitness, gamma: float) -> BlockingWitness | None:
    """Re-evaluate a candidate from scratch and keep it only if every member gains beyond 3 standard errors."""
    rows = sample.values.shape[0]
    policy = ThresholdPolicy(sample.values, sample.cost_ids, sample.costs, witness.weights)
    allocations, incurred = policy.allocate(witness.threshold)
    if incurred.sum() > witness.budget * rows + 1e-9:
        return None
    members = list(witness.coalition)
    gaps = _received(sample.values, allocations)[:, members] - (1 + gamma) * sample.induced[:, members]
    stderr = gaps.std(axis=0, ddof=1) / math.sqrt(rows)
    if np.all(gaps.mean(axis=0) - Z_SCORE * stderr > 0):
        return BlockingWitness(
            coalition=witness.coalition,
            weights=witness.weights,
            threshold=witness.threshold,
            cost=float(incurred.mean()),
            budget=witness.budget,
            baseline=witness.baseline,
            alternative=witness.alternative,
            stderr=stderr,
        )
    return None


def certify_ex_ante(
    instance: Instance,
    kind: MechanismKind | str,
    beta: PacingProfile | npt.ArrayLike,
    gamma: float,
    samples: int = 100_000,
    *,
    seed: int | None = None,
    workers: int = 1,
) -> CoreCertificate:
    """Certify or refute that the allocation induced by a scaling profile is in the γ-approximate ex-ante core.

    Every coalition is tested against the threshold policy in the equilibrium
    direction whose cost reaches its share, less three binomial standard errors.
    Coalitions that do not pass are searched for a blocking policy among that
    direction and 32 random directions per member, each spending at most the
    coalition's share on the same draws.

    Args:
        instance: The problem instance.
        kind: Mechanism run on the scaled reports.
        beta: The value-scaling profile.
        gamma: Multiplicative approximation factor.
        samples: Number of i.i.d. draws shared by every test.
        seed: Run seed; defaults to the instance seed.
        workers: Number of worker processes for the coalition tests.

    Returns:
        A certificate whose status is certified, refuted with a blocking
        witness, or inconclusive with the first undecided coalition.
    """
    kind = MechanismKind(kind)
    if gamma < 0:
        msg = f"Approximation factor must be nonnegative, got {gamma}"
        raise ValueError(msg)
    vector = beta.beta if isinstance(beta, PacingProfile) else np.asarray(beta, dtype=np.float64)
    seed = instance.seed if seed is None else seed
    draws = sample_batch(instance.dist, substream(seed, "audit"), samples)
    reports, unbounded = scaled_reports(draws.values, vector)
    outcome = run_batch(kind, reports, unbounded, draws.cost_ids, instance.costs)
    sample = _Sample(
        values=draws.values,
        cost_ids=draws.cost_ids,
        costs=instance.costs,
        induced=_received(draws.values, outcome.allocations),
    )
    weights = equilibrium_weights(vector)
    shares = np.asarray(instance.shares, dtype=np.float64)
    members_list, sampled = coalitions(instance.n, substream(seed, "coalitions"))
    tasks = [(sample, members, weights, float(shares[list(members)].sum()), gamma) for members in members_list]
    witnesses = tuple(map_tasks(_certify_coalition, tasks, workers))

    undecided = [w for w in witnesses if w.verdict is not CoalitionVerdict.PASSED]
    tie = any(w.tie for w in witnesses)
    if not undecided:
        logger.info("Ex-ante audit at γ=%g: certified over %d coalitions", gamma, len(witnesses))
        return CoreCertificate(
            status=CertificateStatus.CERTIFIED,
            gamma=gamma,
            witnesses=witnesses,
            samples=samples,
            sampled=sampled,
            tie=tie,
        )
    for index, witness in enumerate(witnesses):
        if witness.verdict is CoalitionVerdict.PASSED:
            continue
        rng = substream(seed, "audit", index)
        count = DIRECTIONS_PER_MEMBER * len(witness.coalition)
        for direction in _directions(weights, witness.coalition, rng, count):
            candidate = _ex_ante_candidate(sample, witness.coalition, direction, witness.target)
            blocking = _ex_ante_blocks(sample, candidate, gamma)
            if blocking is not None:
                logger.info("Ex-ante audit at γ=%g: refuted by coalition %s", gamma, witness.coalition)
                return CoreCertificate(
                    status=CertificateStatus.REFUTED,
                    gamma=gamma,
                    witnesses=witnesses,
                    blocking=blocking,
                    samples=samples,
                    sampled=sampled,
                    tie=tie,
                )
    logger.warning("Ex-ante audit at γ=%g is inconclusive for coalition %s", gamma, undecided[0].coalition)
    return CoreCertificate(
        status=CertificateStatus.INCONCLUSIVE,
        gamma=gamma,
        witnesses=witnesses,
        offending=undecided[0].coalition,
        samples=samples,
        sampled=sampled,
        tie=tie,
    )


@dataclass(frozen=True, kw_only=True, eq=False)
class _Realized:
    values: FloatArray
    cost_ids: IntArray
    costs: tuple[CostFunction, ...]
    utilities: FloatArray
    horizon: int


type _ExPostTask = tuple[_Realized, Coalition, list[FloatArray], float, float, tuple[float, ...]]


def _ex_post_candidate(realized: _Realized, members: Coalition, direction: FloatArray, share: float) -> BlockingWitness:
    budget = share * realized.horizon
    policy = ThresholdPolicy(realized.values, realized.cost_ids, realized.costs, direction)
    threshold = policy.within(budget)
    allocations, incurred = policy.allocate(threshold)
    return BlockingWitness(
        coalition=members,
        weights=direction,
        threshold=threshold,
        cost=float(incurred.sum()),
        budget=budget,
        baseline=realized.utilities[list(members)],
        alternative=_received(realized.values, allocations)[:, list(members)].sum(axis=0) / realized.horizon,
    )


def _search_coalition(task: _ExPostTask) -> tuple[BlockingWitness, list[float]]:
    realized, members, directions, share, gamma, delta_grid = task
    best: BlockingWitness | None = None
    frontier = [-math.inf] * len(delta_grid)
    for direction in directions:
        candidate = _ex_post_candidate(realized, members, direction, share)
        if best is None or candidate.delta_at(gamma) > best.delta_at(gamma):
            best = candidate
        frontier = [max(g, candidate.gamma_at(d)) for g, d in zip(frontier, delta_grid, strict=True)]
    if best is None:
        msg = "Coalition search needs at least one direction"
        raise ValueError(msg)
    logger.debug("Coalition %s: best δ at γ=%g is %.4g", members, gamma, best.delta_at(gamma))
    return best, frontier


def _revalidate(realized: _Realized, witness: BlockingWitness, gamma: float, delta: float) -> bool:
    """Recompute a blocking witness from the trace and check it against the blocking definition."""
    policy = ThresholdPolicy(realized.values, realized.cost_ids, realized.costs, witness.weights)
    allocations, incurred = policy.allocate(witness.threshold)
    if incurred.sum() > witness.budget + 1e-9:
        return False
    members = list(witness.coalition)
    alternative = _received(realized.values, allocations)[:, members].sum(axis=0) / realized.horizon
    return bool(np.all(alternative > (1 + gamma) * realized.utilities[members] + delta))


def audit_ex_post(
    result: SimulationResult,
    instance: Instance,
    gamma: float,
    delta: float | None = None,
    *,
    delta_grid: Sequence[float] = DEFAULT_DELTA_GRID,
    beta: PacingProfile | npt.ArrayLike | None = None,
    seed: int | None = None,
    workers: int = 1,
) -> CoreCertificate:
    """Search the realized rounds of a run for (γ, δ)-blocking coalitions.

    For each coalition, threshold policies in the equilibrium direction and 32
    random directions per member are run on the realized values under the
    coalition's budget (Σ_{i∈S} α_i)·T. Utilities of the run itself are
    recomputed from the trace.

    Args:
        result: A simulation with a full trace.
        instance: The instance that was simulated.
        gamma: Multiplicative approximation factor.
        delta: Additive slack; defaults to n·sqrt(log T / T).
        delta_grid: Additive slacks at which the frontier γ*(δ) is reported.
        beta: Profile whose weights give the first search direction; equal weights when omitted.
        seed: Seed of the random directions; defaults to the run seed.
        workers: Number of worker processes for the coalition searches.

    Returns:
        A refuted certificate carrying the strongest blocking witness, or a
        certified one, together with δ*(γ) and the frontier.

    Raises:
        ThinnedTraceError: If the trace does not contain every round.
    """
    trace = result.trace
    if trace.thinned:
        raise ThinnedTraceError(trace.stride)
    horizon = result.horizon
    realized = _Realized(
        values=trace.values,
        cost_ids=trace.cost_ids,
        costs=instance.costs,
        utilities=_received(trace.values, trace.allocations).sum(axis=0) / horizon,
        horizon=horizon,
    )
    scale = reference_scale(instance.n, horizon)
    delta = scale if delta is None else delta
    grid = tuple(float(d) for d in delta_grid)
    if beta is None:
        vector = np.ones(instance.n)
    else:
        vector = beta.beta if isinstance(beta, PacingProfile) else np.asarray(beta, dtype=np.float64)
    weights = equilibrium_weights(vector)
    seed = result.seed if seed is None else seed
    shares = np.asarray(instance.shares, dtype=np.float64)
    members_list, sampled = coalitions(instance.n, substream(seed, "coalitions"))
    tasks: list[_ExPostTask] = [
        (
            realized,
            members,
            _directions(weights, members, substream(seed, "audit", index), DIRECTIONS_PER_MEMBER * len(members)),
            float(shares[list(members)].sum()),
            gamma,
            grid,
        )
        for index, members in enumerate(members_list)
    ]
    searched = map_tasks(_search_coalition, tasks, workers)
    candidates = tuple(best for best, _ in searched)
    frontier = tuple((d, max(row[j] for _, row in searched)) for j, d in enumerate(grid))
    strongest = max(candidates, key=lambda witness: witness.delta_at(gamma))
    delta_star = strongest.delta_at(gamma)
    blocking = strongest if delta_star > delta and _revalidate(realized, strongest, gamma, delta) else None
    status = CertificateStatus.REFUTED if blocking is not None else CertificateStatus.CERTIFIED
    logger.info(
        "Ex-post audit at (γ=%g, δ=%.4g): %s with δ*=%.4g, reference scale %.4g",
        gamma,
        delta,
        status,
        delta_star,
        scale,
    )
    return CoreCertificate(
        status=status,
        gamma=gamma,
        candidates=candidates,
        blocking=blocking,
        delta=delta,
        delta_star=delta_star,
        frontier=frontier,
        reference_scale=scale,
        samples=horizon,
        sampled=sampled,
    )

