"""Instances, valuation distributions and round samplers."""

import functools
import logging
import math
from dataclasses import dataclass, field
from enum import StrEnum, auto

import numpy as np
import numpy.typing as npt
from scipy.stats import qmc

from pacecore.domain.costs import CostFunction, CostKind
from pacecore.domain.errors import ConfigurationError

__all__ = [
    "DEFAULT_PERTURBATION",
    "Atom",
    "Box",
    "Component",
    "DistributionSpec",
    "Draws",
    "Instance",
    "PermutedAtom",
    "SamplingMethod",
    "ValueProfile",
    "sample_batch",
    "sample_round",
]

logger = logging.getLogger(__name__)

DEFAULT_PERTURBATION = 1e-4
_SUM_TOLERANCE = 1e-12

type Matrix = tuple[tuple[float, ...], ...]


def _as_matrix(rows: Matrix, n: int, m: int, what: str) -> npt.NDArray[np.float64]:
    array = np.asarray(rows, dtype=np.float64)
    if array.shape != (n, m):
        msg = f"{what} has shape {array.shape}, expected ({n}, {m})"
        raise ConfigurationError(msg)
    if not np.all(np.isfinite(array)) or np.any(array < 0) or np.any(array > 1):
        msg = f"{what} values must lie in [0, 1]"
        raise ConfigurationError(msg)
    return array


@dataclass(frozen=True, kw_only=True)
class Atom:
    """Point mass at a fixed valuation matrix."""

    probability: float
    values: Matrix
    cost_id: int = 0


@dataclass(frozen=True, kw_only=True)
class Box:
    """Independent uniform values on per-entry intervals [low, high]."""

    probability: float
    low: Matrix
    high: Matrix
    cost_id: int = 0


@dataclass(frozen=True, kw_only=True)
class PermutedAtom:
    """Base values dealt to agents through a uniformly random permutation.

    Agent i receives ``base[σ(i)]`` on every good, plus an optional uniform spread
    of width ``jitter``.
    """

    probability: float
    base: tuple[float, ...]
    jitter: float = 0.0
    cost_id: int = 0


type Component = Atom | Box | PermutedAtom


class SamplingMethod(StrEnum):
    """How the uniform numbers behind a batch of draws are generated."""

    IID = auto()
    SOBOL = auto()


@dataclass(frozen=True, kw_only=True)
class DistributionSpec:
    """Finite mixture of atoms, boxes and permuted atoms, each pinned to one cost.

    Atom-like components are smoothed by adding Uniform[0, ε] to every entry and
    clamping to [0, 1].
    """

    n: int
    m: int
    components: tuple[Component, ...]
    costs: tuple[CostFunction, ...]
    perturbation_eps: float = DEFAULT_PERTURBATION

    def __post_init__(self) -> None:
        """Validate probabilities, shapes, value ranges and cost references."""
        if self.n < 1 or self.m < 1:
            msg = f"Distribution needs n >= 1 and m >= 1, got n={self.n}, m={self.m}"
            raise ConfigurationError(msg)
        if not self.components:
            msg = "Distribution must contain at least one component"
            raise ConfigurationError(msg)
        if not self.costs:
            msg = "Distribution must define at least one cost function"
            raise ConfigurationError(msg)
        if not 0 <= self.perturbation_eps < 1:
            msg = f"Perturbation width must lie in [0, 1), got {self.perturbation_eps}"
            raise ConfigurationError(msg)
        probabilities = [component.probability for component in self.components]
        if any(not 0 <= p <= 1 for p in probabilities):
            msg = "Component probabilities must lie in [0, 1]"
            raise ConfigurationError(msg)
        if abs(math.fsum(probabilities) - 1) > _SUM_TOLERANCE:
            msg = f"Component probabilities sum to {math.fsum(probabilities)!r}, expected 1"
            raise ConfigurationError(msg)
        for cost in self.costs:
            cost.check_shape(self.n, self.m)
        for component in self.components:
            self._validate_component(component)

    def _validate_component(self, component: Component) -> None:
        if not 0 <= component.cost_id < len(self.costs):
            msg = f"Component refers to cost {component.cost_id} but only {len(self.costs)} are defined"
            raise ConfigurationError(msg)
        match component:
            case Atom(values=values):
                _as_matrix(values, self.n, self.m, "Atom")
            case Box(low=low, high=high):
                if np.any(_as_matrix(low, self.n, self.m, "Box low") > _as_matrix(high, self.n, self.m, "Box high")):
                    msg = "Box intervals must satisfy low <= high"
                    raise ConfigurationError(msg)
            case PermutedAtom(base=base, jitter=jitter):
                if len(base) != self.n:
                    msg = f"Permuted atom has {len(base)} base values, expected {self.n}"
                    raise ConfigurationError(msg)
                if jitter < 0 or any(not 0 <= value <= 1 - jitter for value in base):
                    msg = "Permuted atom base values plus jitter must lie in [0, 1]"
                    raise ConfigurationError(msg)

    @functools.cached_property
    def cumulative_probabilities(self) -> npt.NDArray[np.float64]:
        """Running sum of component probabilities, pinned to end at exactly 1."""
        cumulative = np.cumsum([component.probability for component in self.components])
        cumulative[-1] = 1.0
        return cumulative

    @property
    def dimension(self) -> int:
        """Number of uniform coordinates consumed per draw."""
        return 1 + 2 * self.n * self.m + self.n

    @property
    def is_continuous(self) -> bool:
        """Whether every component has a density (smoothed atoms or nondegenerate boxes)."""
        if self.perturbation_eps > 0:
            return all(not isinstance(c, Box) or np.all(np.subtract(c.high, c.low) > 0) for c in self.components)
        return all(
            (isinstance(c, Box) and bool(np.all(np.subtract(c.high, c.low) > 0)))
            or (isinstance(c, PermutedAtom) and c.jitter > 0)
            for c in self.components
        )

    @property
    def has_only_zero_one_costs(self) -> bool:
        """Whether every round is a single good with the 0-1 cost."""
        return self.m == 1 and all(cost.kind is CostKind.ZERO_ONE_SINGLE_GOOD for cost in self.costs)


@dataclass(frozen=True, kw_only=True, eq=False)
class ValueProfile:
    """One round's realized valuation matrix and cost function."""

    values: npt.NDArray[np.float64]
    cost: CostFunction
    cost_id: int = 0


@dataclass(frozen=True, kw_only=True, eq=False)
class Draws:
    """A batch of rounds: values of shape (size, n, m) and the cost id of each round."""

    values: npt.NDArray[np.float64]
    cost_ids: npt.NDArray[np.int64]

    def __len__(self) -> int:
        """Return the number of rounds in the batch."""
        return int(self.cost_ids.shape[0])


@dataclass(frozen=True, kw_only=True)
class Instance:
    """A repeated allocation problem: agents, goods, horizon, shares and value distribution."""

    n: int
    m: int
    horizon: int
    shares: tuple[float, ...]
    dist: DistributionSpec
    seed: int = 0
    name: str = field(default="instance", compare=False)

    def __post_init__(self) -> None:
        """Validate the instance against its distribution."""
        if self.n < 1 or self.m < 1 or self.horizon < 1:
            msg = f"Instance needs n, m and T at least 1, got n={self.n}, m={self.m}, T={self.horizon}"
            raise ConfigurationError(msg)
        if len(self.shares) != self.n:
            msg = f"Instance has {len(self.shares)} shares for {self.n} agents"
            raise ConfigurationError(msg)
        if any(not share > 0 for share in self.shares):
            msg = "Every share must be positive"
            raise ConfigurationError(msg)
        if math.fsum(self.shares) > 1 + _SUM_TOLERANCE:
            msg = f"Shares sum to {math.fsum(self.shares)!r}, which exceeds 1"
            raise ConfigurationError(msg)
        if (self.dist.n, self.dist.m) != (self.n, self.m):
            msg = f"Distribution is over ({self.dist.n}, {self.dist.m}), instance is ({self.n}, {self.m})"
            raise ConfigurationError(msg)
        if not 0 <= self.seed < 1 << 64:
            msg = "Seed must be a 64-bit unsigned integer"
            raise ConfigurationError(msg)

    @property
    def alpha(self) -> float:
        """Total share α = Σ α_i."""
        return math.fsum(self.shares)

    @property
    def costs(self) -> tuple[CostFunction, ...]:
        """Cost functions referenced by the distribution's components."""
        return self.dist.costs


def _uniforms(
    dist: DistributionSpec,
    rng: np.random.Generator,
    size: int,
    method: SamplingMethod,
) -> npt.NDArray[np.float64]:
    if method is SamplingMethod.SOBOL:
        # Sobol balance needs a power-of-two point count.
        exponent = max(0, math.ceil(math.log2(size)))
        sampler = qmc.Sobol(d=dist.dimension, scramble=True, rng=rng)
        return np.asarray(sampler.random_base2(exponent), dtype=np.float64)
    return rng.random((size, dist.dimension))


def sample_batch(
    dist: DistributionSpec,
    rng: np.random.Generator,
    size: int,
    *,
    method: SamplingMethod = SamplingMethod.IID,
) -> Draws:
    """Draw a batch of rounds.

    Every draw is a fixed transform of one row of uniforms: the first coordinate
    picks the component, the next n·m give box values and jitter, the next n·m
    give the atom perturbation and the last n order the permutation.

    Args:
        dist: The distribution to sample.
        rng: Generator that owns the randomness.
        size: Number of rounds. Sobol batches are rounded up to a power of two.
        method: i.i.d. uniforms or scrambled Sobol points.

    Returns:
        The sampled values and cost ids.
    """
    if size < 1:
        msg = f"Batch size must be positive, got {size}"
        raise ValueError(msg)
    n, m = dist.n, dist.m
    nm = n * m
    uniforms = _uniforms(dist, rng, size, method)
    rows = uniforms.shape[0]
    spread = uniforms[:, 1 : 1 + nm].reshape(rows, n, m)
    perturbation = dist.perturbation_eps * uniforms[:, 1 + nm : 1 + 2 * nm].reshape(rows, n, m)
    order = uniforms[:, 1 + 2 * nm :]

    chosen = np.searchsorted(dist.cumulative_probabilities, uniforms[:, 0], side="right")
    chosen = np.minimum(chosen, len(dist.components) - 1)
    values = np.empty((rows, n, m), dtype=np.float64)
    cost_ids = np.empty(rows, dtype=np.int64)
    for index, component in enumerate(dist.components):
        selected = chosen == index
        if not selected.any():
            continue
        cost_ids[selected] = component.cost_id
        match component:
            case Atom(values=matrix):
                values[selected] = np.asarray(matrix) + perturbation[selected]
            case Box(low=low, high=high):
                low_array = np.asarray(low)
                values[selected] = low_array + (np.asarray(high) - low_array) * spread[selected]
            case PermutedAtom(base=base, jitter=jitter):
                dealt = np.asarray(base)[np.argsort(order[selected], axis=1)]
                values[selected] = dealt[:, :, None] + jitter * spread[selected] + perturbation[selected]
    np.clip(values, 0.0, 1.0, out=values)
    logger.debug("Sampled %d rounds with %s uniforms", rows, method)
    return Draws(values=values, cost_ids=cost_ids)


def sample_round(dist: DistributionSpec, rng: np.random.Generator) -> ValueProfile:
    """Draw one round's valuation matrix and cost function.

    Consecutive calls on the same generator are i.i.d.
    """
    draws = sample_batch(dist, rng, 1)
    cost_id = int(draws.cost_ids[0])
    values = draws.values[0]
    values.setflags(write=False)
    return ValueProfile(values=values, cost=dist.costs[cost_id], cost_id=cost_id)
