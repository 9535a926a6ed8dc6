"""Expected spend of value-scaling profiles and the focal pacing equilibrium.

An agent scaling its values by 1/beta_i spends, before depletion, the expected
payment C_i(beta) per round. The focal equilibrium is a beta* with C_i(beta*) =
alpha_i for every agent, or beta*_i = 0 when even unbounded reports spend less.
"""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, replace

import numpy as np
import numpy.typing as npt
from scipy.stats import norm

from pacecore.domain.errors import ConfigurationError
from pacecore.domain.mechanisms import MechanismKind, mechanism_for, run_batch
from pacecore.domain.model import Draws, Instance, SamplingMethod, sample_batch
from pacecore.domain.parallel import map_tasks
from pacecore.domain.randomness import substream
from pacecore.domain.reduction import simulate_replications
from pacecore.domain.strategies import value_scaling_profile

__all__ = [
    "DEFAULT_SCHEDULE",
    "DEFAULT_TOLERANCE",
    "MIN_SAMPLES",
    "FocalReport",
    "NonConvergenceError",
    "PacingProfile",
    "SpendEstimate",
    "SpendOracle",
    "estimate_spend",
    "focal_threshold",
    "scaled_reports",
    "solve_pacing",
    "verify_focal",
]

logger = logging.getLogger(__name__)

type FloatArray = npt.NDArray[np.float64]
type BoolArray = npt.NDArray[np.bool_]

MIN_SAMPLES = 1_000
DEFAULT_TOLERANCE = 1e-3
DEFAULT_SCHEDULE = (10_000, 100_000)
CONFIDENCE = 0.99
_SPEND_CHUNK = 16_384
_TINY_BETA = 1e-9
_BETA_XTOL = 1e-10
_DAMPING = 0.5


@dataclass(frozen=True, kw_only=True, eq=False)
class PacingProfile:
    """A value-scaling vector with the solver diagnostics that produced it.

    ``residuals`` holds |C_i - alpha_i| for agents with beta_i > 0 and
    max(0, C_i - alpha_i) for agents with beta_i = 0.
    """

    beta: FloatArray
    spend: FloatArray
    residuals: FloatArray
    iterations: int
    samples: int
    converged: bool
    tol: float = DEFAULT_TOLERANCE

    @classmethod
    def fixed(cls, beta: npt.ArrayLike) -> PacingProfile:
        """A profile given directly rather than solved for."""
        values = np.asarray(beta, dtype=np.float64)
        zeros = np.zeros_like(values)
        return cls(beta=values, spend=zeros, residuals=zeros, iterations=0, samples=0, converged=True)


class NonConvergenceError(RuntimeError):
    """Raised when the pacing solver exhausts its sweeps without meeting the tolerance."""

    def __init__(self, profile: PacingProfile) -> None:
        """Initialize the error with the last iterate.

        Args:
            profile: The last iterate, with its residuals.
        """
        super().__init__(
            f"Pacing solver did not converge after {profile.iterations} sweeps; "
            f"largest residual {float(profile.residuals.max()):.3g} exceeds {profile.tol}"
        )
        self.profile = profile


@dataclass(frozen=True, kw_only=True, eq=False)
class SpendEstimate:
    """Monte Carlo estimate of expected per-round payments with 99% half-widths."""

    mean: FloatArray
    half_width: FloatArray
    samples: int


def scaled_reports(values: FloatArray, beta: FloatArray) -> tuple[FloatArray, BoolArray]:
    """Value-scaling reports V_i / beta_i for a (rounds, n, m) batch; beta_i = 0 is unbounded."""
    infinite = np.broadcast_to((beta == 0)[None, :, None], values.shape)
    divisor = np.where(beta > 0, beta, 1.0)[None, :, None]
    return np.where(infinite, 0.0, values / divisor), infinite.copy()


def _payments(instance: Instance, kind: MechanismKind, draws: Draws, beta: FloatArray) -> FloatArray:
    reports, unbounded = scaled_reports(draws.values, beta)
    return run_batch(kind, reports, unbounded, draws.cost_ids, instance.costs).payments


def _as_beta(beta: PacingProfile | npt.ArrayLike, n: int) -> FloatArray:
    vector = beta.beta if isinstance(beta, PacingProfile) else np.asarray(beta, dtype=np.float64)
    if vector.shape != (n,) or not np.all(np.isfinite(vector)) or np.any(vector < 0):
        msg = f"Pacing vector must hold {n} finite nonnegative entries, got {vector.tolist()}"
        raise ConfigurationError(msg)
    return vector


type _SpendTask = tuple[Instance, MechanismKind, FloatArray, int, int, int]


def _spend_chunk(task: _SpendTask) -> tuple[FloatArray, FloatArray]:
    instance, kind, beta, seed, chunk, size = task
    draws = sample_batch(instance.dist, substream(seed, "spend", chunk), size)
    payments = _payments(instance, kind, draws, beta)
    return payments.sum(axis=0), np.square(payments).sum(axis=0)


def estimate_spend(
    instance: Instance,
    kind: MechanismKind | str,
    beta: PacingProfile | npt.ArrayLike,
    samples: int = 10_000,
    *,
    seed: int | None = None,
    workers: int = 1,
) -> SpendEstimate:
    """Estimate C_i(beta), the expected payment per round before depletion.

    Draws are i.i.d. from the "spend" substreams in fixed-size chunks whose partial
    sums are reduced in chunk order, so results do not depend on the worker count.

    Args:
        instance: The problem instance.
        kind: Mechanism run on the scaled reports.
        beta: Value-scaling vector or a solved profile.
        samples: Number of draws, at least 1000.
        seed: Run seed; defaults to the instance seed.
        workers: Number of worker processes.

    Returns:
        Mean payments and 99% normal-approximation half-widths.
    """
    if samples < MIN_SAMPLES:
        msg = f"Spend estimates need at least {MIN_SAMPLES} samples, got {samples}"
        raise ValueError(msg)
    kind = MechanismKind(kind)
    vector = _as_beta(beta, instance.n)
    seed = instance.seed if seed is None else seed
    tasks = [
        (instance, kind, vector, seed, chunk, min(_SPEND_CHUNK, samples - start))
        for chunk, start in enumerate(range(0, samples, _SPEND_CHUNK))
    ]
    totals = np.zeros(instance.n, dtype=np.float64)
    squares = np.zeros(instance.n, dtype=np.float64)
    for total, square in map_tasks(_spend_chunk, tasks, workers):
        totals += total
        squares += square
    mean = totals / samples
    variance = np.maximum(squares - samples * np.square(mean), 0.0) / (samples - 1)
    half_width = norm.ppf(0.5 + CONFIDENCE / 2) * np.sqrt(variance / samples)
    logger.debug("Estimated spend %s ± %s from %d samples", mean.tolist(), half_width.tolist(), samples)
    return SpendEstimate(mean=mean, half_width=half_width, samples=samples)


class SpendOracle:
    """Spend evaluated on one fixed batch of draws (common random numbers).

    Reusing the batch across every evaluation makes the estimated spend of an
    agent exactly non-increasing in its own beta for the supported mechanisms.
    """

    def __init__(
        self,
        instance: Instance,
        kind: MechanismKind,
        samples: int,
        rng: np.random.Generator,
        *,
        method: SamplingMethod = SamplingMethod.SOBOL,
    ) -> None:
        """Draw the shared batch.

        Args:
            instance: The problem instance.
            kind: Mechanism run on the scaled reports.
            samples: Requested batch size; Sobol batches round up to a power of two.
            rng: Generator that owns the batch.
            method: i.i.d. or scrambled Sobol draws.
        """
        self.instance = instance
        self.kind = kind
        self.draws = sample_batch(instance.dist, rng, samples, method=method)
        self.evaluations = 0

    @property
    def samples(self) -> int:
        """Size of the shared batch."""
        return len(self.draws)

    def spend(self, beta: FloatArray) -> FloatArray:
        """Mean payment of every agent on the shared batch."""
        self.evaluations += 1
        return _payments(self.instance, self.kind, self.draws, beta).mean(axis=0)


def _residuals(spend: FloatArray, shares: FloatArray, beta: FloatArray) -> FloatArray:
    gap = spend - shares
    return np.where(beta > 0, np.abs(gap), np.maximum(gap, 0.0))


def _solve_coordinate(oracle: SpendOracle, beta: FloatArray, agent: int, share: float, tol: float) -> float:
    trial = beta.copy()

    def spend_at(value: float) -> float:
        trial[agent] = value
        return float(oracle.spend(trial)[agent])

    low = _TINY_BETA
    at_low = spend_at(low)
    if at_low <= share:
        return low if at_low >= share - tol else 0.0
    # Payments are at most m / beta_i, so the upper end never overspends.
    high = oracle.instance.m / share
    while high - low > _BETA_XTOL:
        middle = (low + high) / 2
        if middle in {low, high}:
            break
        at_middle = spend_at(middle)
        if abs(at_middle - share) <= tol / 10:
            return middle
        if at_middle > share:
            low = middle
        else:
            high = middle
    return high


def solve_pacing(
    instance: Instance,
    kind: MechanismKind | str,
    tol: float = DEFAULT_TOLERANCE,
    max_iters: int = 50,
    *,
    schedule: Sequence[int] = DEFAULT_SCHEDULE,
    seed: int | None = None,
) -> PacingProfile:
    """Solve C_i(beta*) = alpha_i (or beta*_i = 0) by damped Gauss-Seidel bisection.

    Each sweep bisects every coordinate in turn on [1e-9, m / alpha_i] against a
    fixed Sobol batch, using the others' latest values. Once an agent's residual
    changes sign between sweeps, updates move only halfway to the bisected value.
    The batch grows through ``schedule`` as the coarser stages converge.

    Args:
        instance: The problem instance; its distribution must be continuous.
        kind: Mechanism run on the scaled reports.
        tol: Largest accepted spend residual.
        max_iters: Total number of sweeps across all stages.
        schedule: Batch sizes of the successive stages.
        seed: Run seed; defaults to the instance seed.

    Returns:
        The converged profile.

    Raises:
        ConfigurationError: If the value distribution is not continuous.
        NonConvergenceError: If the last stage has not converged after ``max_iters`` sweeps.
    """
    kind = MechanismKind(kind)
    if not instance.dist.is_continuous:
        msg = "Pacing equilibria need a continuous value distribution; set a positive perturbation"
        raise ConfigurationError(msg)
    mechanism_for(kind).check_compatible(instance.n, instance.m, instance.costs)
    seed = instance.seed if seed is None else seed
    shares = np.asarray(instance.shares, dtype=np.float64)
    beta = np.ones(instance.n, dtype=np.float64)
    sweeps = 0
    profile: PacingProfile | None = None
    for stage, samples in enumerate(schedule):
        oracle = SpendOracle(instance, kind, samples, substream(seed, "solver", stage))
        spend = oracle.spend(beta)
        residuals = _residuals(spend, shares, beta)
        previous_sign = np.sign(spend - shares)
        damped = np.zeros(instance.n, dtype=np.bool_)
        while residuals.max() > tol and sweeps < max_iters:
            sweeps += 1
            for agent in range(instance.n):
                target = _solve_coordinate(oracle, beta, agent, float(shares[agent]), tol)
                if damped[agent] and target > 0 and beta[agent] > 0:
                    target = _DAMPING * beta[agent] + (1 - _DAMPING) * target
                beta[agent] = target
            spend = oracle.spend(beta)
            residuals = _residuals(spend, shares, beta)
            sign = np.sign(spend - shares)
            damped |= (sign * previous_sign) < 0
            previous_sign = sign
            logger.debug("Sweep %d at %d samples: beta=%s residuals=%s", sweeps, oracle.samples, beta, residuals)
        profile = PacingProfile(
            beta=beta.copy(),
            spend=spend,
            residuals=residuals,
            iterations=sweeps,
            samples=oracle.samples,
            converged=bool(residuals.max() <= tol),
            tol=tol,
        )
    if profile is None or not profile.converged:
        failed = profile or PacingProfile.fixed(beta)
        logger.warning("Pacing solver stopped without converging: %s", failed.residuals.tolist())
        raise NonConvergenceError(failed)
    logger.info("Pacing solver converged after %d sweeps: beta=%s", profile.iterations, profile.beta.tolist())
    return profile


def focal_threshold(horizon: int) -> float:
    """Round before which a depletion counts as early: T - 2·sqrt(T)·ln T."""
    return horizon - 2 * math.sqrt(horizon) * math.log(horizon)


@dataclass(frozen=True, kw_only=True, eq=False)
class FocalReport:
    """Depletion and spend behaviour of a pacing profile over seeded runs."""

    runs: int
    horizon: int
    threshold: float
    early_depletion_fraction: float
    mean_spend: FloatArray
    spend_ratio: FloatArray
    mean_utilities: FloatArray


def verify_focal(
    instance: Instance,
    kind: MechanismKind | str,
    beta: PacingProfile | npt.ArrayLike,
    runs: int,
    horizon: int | None = None,
    *,
    seed: int | None = None,
    workers: int = 1,
) -> FocalReport:
    """Simulate a pacing profile repeatedly and measure early depletion and spend.

    A run depletes early when some agent's depletion time falls before
    T - 2·sqrt(T)·ln T.
    """
    if runs < 1:
        msg = f"Focal verification needs at least one run, got {runs}"
        raise ValueError(msg)
    vector = _as_beta(beta, instance.n)
    if horizon is not None:
        instance = replace(instance, horizon=horizon)
    strategies = value_scaling_profile(vector)
    results = simulate_replications(instance, kind, strategies, runs, seed=seed, workers=workers)
    threshold = focal_threshold(instance.horizon)
    early = [int(result.depletion_times.min()) < threshold for result in results]
    spend = np.mean([result.spend for result in results], axis=0)
    budget = np.asarray(instance.shares) * instance.horizon
    report = FocalReport(
        runs=runs,
        horizon=instance.horizon,
        threshold=threshold,
        early_depletion_fraction=sum(early) / runs,
        mean_spend=spend,
        spend_ratio=spend / budget,
        mean_utilities=np.mean([result.utilities for result in results], axis=0),
    )
    logger.info(
        "Focal check over %d runs at T=%d: early depletion %.3f, spend ratio %s",
        runs,
        instance.horizon,
        report.early_depletion_fraction,
        report.spend_ratio.tolist(),
    )
    return report
