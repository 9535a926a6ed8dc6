"""Paired Monte Carlo estimates of one agent's gain from deviating."""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, replace

import numpy as np
import numpy.typing as npt
from scipy.stats import norm

from pacecore.domain.equilibrium import CONFIDENCE, PacingProfile, estimate_spend
from pacecore.domain.mechanisms import MechanismKind
from pacecore.domain.model import Instance
from pacecore.domain.parallel import map_tasks
from pacecore.domain.reduction import simulate
from pacecore.domain.strategies import Strategy, Truthful, ValueScaling, value_scaling_profile

__all__ = ["DeviationReport", "deviation_gain", "deviation_strategy"]

logger = logging.getLogger(__name__)

type FloatArray = npt.NDArray[np.float64]

_MIN_REPLICATIONS = 2


@dataclass(frozen=True, kw_only=True, eq=False)
class DeviationReport:
    """Per-round utility gain of a unilateral deviation with a 99% confidence interval."""

    deviator: int
    horizon: int
    gains: FloatArray
    mean: float
    half_width: float
    baseline_overspends: bool = False

    @property
    def replications(self) -> int:
        """Number of paired runs."""
        return int(self.gains.shape[0])

    @property
    def upper(self) -> float:
        """Upper end of the confidence interval."""
        return self.mean + self.half_width

    @property
    def lower(self) -> float:
        """Lower end of the confidence interval."""
        return self.mean - self.half_width


def deviation_strategy(name: str, beta: float) -> Strategy:
    """Build a named deviation from an agent's equilibrium scaling factor.

    Args:
        name: One of "half", "double", "truthful", "baseline", or a number used
            directly as the deviating scaling factor.
        beta: The agent's equilibrium scaling factor.

    Returns:
        The deviating strategy.
    """
    match name:
        case "half":
            return ValueScaling(beta / 2)
        case "double":
            return ValueScaling(beta * 2)
        case "truthful":
            return Truthful()
        case "baseline":
            return ValueScaling(beta)
        case _:
            try:
                return ValueScaling(float(name))
            except ValueError:
                msg = f"Unknown deviation '{name}'; use half, double, truthful, baseline or a scaling factor"
                raise ValueError(msg) from None


type _PairTask = tuple[Instance, MechanismKind, tuple[Strategy, ...], tuple[Strategy, ...], int, int, int]


def _paired_gain(task: _PairTask) -> float:
    instance, kind, baseline, deviated, deviator, seed, replication = task
    base = simulate(instance, kind, baseline, seed=seed, replication=replication)
    alternative = simulate(instance, kind, deviated, seed=seed, replication=replication)
    return float(alternative.utilities[deviator] - base.utilities[deviator])


def deviation_gain(
    instance: Instance,
    kind: MechanismKind | str,
    baseline: PacingProfile | npt.ArrayLike,
    deviator: int,
    alternative: Strategy,
    replications: int,
    horizon: int | None = None,
    *,
    seed: int | None = None,
    workers: int = 1,
    check_baseline: bool = False,
) -> DeviationReport:
    """Estimate U_i(alternative, others at baseline) - U_i(baseline) per round.

    Both arms of a pair share the replication index, so they see identical
    value draws; only the deviator's reports differ.

    Args:
        instance: The problem instance.
        kind: Mechanism run every round.
        baseline: The value-scaling profile everyone else keeps playing.
        deviator: Index of the deviating agent.
        alternative: The deviator's strategy; must be picklable when ``workers > 1``.
        replications: Number of paired runs, at least 2.
        horizon: Optional override of the instance horizon.
        seed: Run seed; defaults to the instance seed.
        workers: Number of worker processes.
        check_baseline: Estimate the baseline spend first and record whether some
            agent overspends its share beyond the estimate's confidence interval.

    Returns:
        The per-pair gains with their mean and 99% half-width.
    """
    kind = MechanismKind(kind)
    if replications < _MIN_REPLICATIONS:
        msg = f"Deviation estimates need at least {_MIN_REPLICATIONS} replications, got {replications}"
        raise ValueError(msg)
    if not 0 <= deviator < instance.n:
        msg = f"Deviator {deviator} is not an agent of an instance with {instance.n} agents"
        raise ValueError(msg)
    beta = baseline.beta if isinstance(baseline, PacingProfile) else np.asarray(baseline, dtype=np.float64)
    if horizon is not None:
        instance = replace(instance, horizon=horizon)
    seed = instance.seed if seed is None else seed

    overspends = False
    if check_baseline:
        spend = estimate_spend(instance, kind, beta, seed=seed, workers=workers)
        overspends = bool(np.any(spend.mean - spend.half_width > np.asarray(instance.shares)))
        if overspends:
            logger.warning("Baseline profile overspends: %s against shares %s", spend.mean, instance.shares)

    profile = value_scaling_profile(beta)
    deviated: list[Strategy] = list(profile)
    deviated[deviator] = alternative
    tasks: Sequence[_PairTask] = [
        (instance, kind, profile, tuple(deviated), deviator, seed, replication) for replication in range(replications)
    ]
    gains = np.asarray(map_tasks(_paired_gain, tasks, workers), dtype=np.float64)
    mean = float(gains.mean())
    half_width = float(norm.ppf(0.5 + CONFIDENCE / 2) * gains.std(ddof=1) / math.sqrt(replications))
    logger.info(
        "Deviation of agent %d at T=%d over %d pairs: gain %.5f ± %.5f",
        deviator,
        instance.horizon,
        replications,
        mean,
        half_width,
    )
    return DeviationReport(
        deviator=deviator,
        horizon=instance.horizon,
        gains=gains,
        mean=mean,
        half_width=half_width,
        baseline_overspends=overspends,
    )
