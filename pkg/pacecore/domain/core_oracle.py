"""Exact ex-ante core checks on tiny single-good instances with atomic support."""

import logging
import math
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
from scipy.optimize import linprog

from pacecore.domain.core_audit import coalitions
from pacecore.domain.costs import ZeroOneSingleGood
from pacecore.domain.errors import ConfigurationError, SizeLimitError
from pacecore.domain.mechanisms import MechanismKind, run_batch
from pacecore.domain.model import Atom, DistributionSpec, Instance

__all__ = [
    "MAX_ORACLE_AGENTS",
    "MAX_ORACLE_ATOMS",
    "ExAntePolicy",
    "TinyInstance",
    "best_weighted_value",
    "blocking_coalition",
    "brute_force_core_oracle",
    "half_space_value",
    "induced_policy",
    "policy_utilities",
]

logger = logging.getLogger(__name__)

type FloatArray = npt.NDArray[np.float64]

MAX_ORACLE_AGENTS = 3
MAX_ORACLE_ATOMS = 6
ORACLE_PERTURBATION = 1e-6
_TOLERANCE = 1e-9


@dataclass(frozen=True, kw_only=True)
class TinyInstance:
    """Single good, at most three agents and six value atoms.

    ``atoms[j][i]`` is agent i's value in atom j, which has probability
    ``probabilities[j]``.
    """

    shares: tuple[float, ...]
    probabilities: tuple[float, ...]
    atoms: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        """Validate sizes, probabilities and values."""
        if self.n > MAX_ORACLE_AGENTS:
            raise SizeLimitError("oracle agent count", self.n, MAX_ORACLE_AGENTS)
        if len(self.atoms) > MAX_ORACLE_ATOMS:
            raise SizeLimitError("oracle support", len(self.atoms), MAX_ORACLE_ATOMS)
        if not self.atoms or len(self.atoms) != len(self.probabilities):
            msg = "Tiny instance needs one probability per atom and at least one atom"
            raise ConfigurationError(msg)
        if any(len(atom) != self.n for atom in self.atoms):
            msg = f"Every atom must hold {self.n} values"
            raise ConfigurationError(msg)
        if abs(math.fsum(self.probabilities) - 1) > _TOLERANCE or min(self.probabilities) < 0:
            msg = "Atom probabilities must be nonnegative and sum to 1"
            raise ConfigurationError(msg)
        if any(not 0 <= value <= 1 for atom in self.atoms for value in atom):
            msg = "Atom values must lie in [0, 1]"
            raise ConfigurationError(msg)

    @property
    def n(self) -> int:
        """Number of agents."""
        return len(self.shares)

    @property
    def values(self) -> FloatArray:
        """Atom values of shape (atoms, n)."""
        return np.asarray(self.atoms, dtype=np.float64)

    @property
    def weights(self) -> FloatArray:
        """Atom probabilities."""
        return np.asarray(self.probabilities, dtype=np.float64)

    def to_instance(self, *, horizon: int = 1000, seed: int = 0) -> Instance:
        """The same distribution as a full instance, with atoms smoothed by 1e-6."""
        components = tuple(
            Atom(probability=p, values=tuple((v,) for v in atom))
            for p, atom in zip(self.probabilities, self.atoms, strict=True)
        )
        dist = DistributionSpec(
            n=self.n,
            m=1,
            components=components,
            costs=(ZeroOneSingleGood(),),
            perturbation_eps=ORACLE_PERTURBATION,
        )
        return Instance(n=self.n, m=1, horizon=horizon, shares=self.shares, dist=dist, seed=seed, name="tiny")


type ExAntePolicy = tuple[frozenset[int], ...]


def induced_policy(tiny: TinyInstance, kind: MechanismKind | str, beta: npt.ArrayLike) -> ExAntePolicy:
    """Agents served on each atom when everyone reports value / β_i (β_i = 0 reports unbounded)."""
    vector = np.asarray(beta, dtype=np.float64)
    values = tiny.values[:, :, None]
    unbounded = np.broadcast_to((vector == 0)[None, :, None], values.shape).copy()
    reports = np.where(unbounded, 0.0, values / np.where(vector > 0, vector, 1.0)[None, :, None])
    outcome = run_batch(kind, reports, unbounded, np.zeros(len(tiny.atoms), dtype=np.int64), (ZeroOneSingleGood(),))
    return tuple(frozenset(int(i) for i in np.flatnonzero(row[:, 0])) for row in outcome.allocations)


def policy_utilities(tiny: TinyInstance, policy: ExAntePolicy) -> FloatArray:
    """Expected value each agent receives under an explicit policy."""
    served = np.zeros((len(tiny.atoms), tiny.n), dtype=np.float64)
    for j, agents in enumerate(policy):
        served[j, list(agents)] = 1.0
    return (tiny.weights[:, None] * tiny.values * served).sum(axis=0)


def _policy_cost(tiny: TinyInstance, policy: ExAntePolicy) -> float:
    return math.fsum(p for p, agents in zip(tiny.probabilities, policy, strict=True) if agents)


def best_weighted_value(tiny: TinyInstance, weights: npt.ArrayLike, budget: float) -> float:
    """Largest expected weighted value of any (fractional) policy whose cost is at most ``budget``."""
    score = tiny.values @ np.asarray(weights, dtype=np.float64)
    result = linprog(
        -(tiny.weights * score),
        A_ub=tiny.weights[None, :],
        b_ub=[budget],
        bounds=[(0.0, 1.0)] * len(tiny.atoms),
        method="highs",
    )
    if not result.success:
        msg = f"Weighted-value program failed: {result.message}"
        raise RuntimeError(msg)
    return float(-result.fun)


def half_space_value(tiny: TinyInstance, weights: npt.ArrayLike, budget: float) -> float:
    """Expected weighted value of the threshold policy of measure ``budget``, splitting the boundary atom."""
    score = tiny.values @ np.asarray(weights, dtype=np.float64)
    remaining = budget
    total = 0.0
    for j in np.argsort(-score, kind="stable"):
        taken = min(float(tiny.weights[j]), max(remaining, 0.0))
        total += taken * float(score[j])
        remaining -= taken
    return total


def _blocks(tiny: TinyInstance, members: tuple[int, ...], target: FloatArray, budget: float) -> bool:
    """Whether some fractional policy within budget gives every member strictly more than its target.

    Maximizes the smallest surplus t over the members; the coalition blocks when t is positive.
    """
    atoms = len(tiny.atoms)
    gains = tiny.weights[:, None] * tiny.values[:, list(members)]
    surplus_rows = np.hstack([-gains.T, np.ones((len(members), 1))])
    budget_row = np.concatenate([tiny.weights, [0.0]])[None, :]
    result = linprog(
        np.concatenate([np.zeros(atoms), [-1.0]]),
        A_ub=np.vstack([surplus_rows, budget_row]),
        b_ub=np.concatenate([-target, [budget]]),
        bounds=[(0.0, 1.0)] * atoms + [(None, None)],
        method="highs",
    )
    if not result.success:
        return False
    return float(-result.fun) > _TOLERANCE


def blocking_coalition(
    tiny: TinyInstance,
    policy: ExAntePolicy,
    gamma: float,
    *,
    delta: float = 0.0,
) -> tuple[int, ...] | None:
    """Find the first coalition, in bitmask order, that blocks a policy.

    S blocks when some fractional policy of cost at most Σ_{i∈S} α_i gives
    every member strictly more than (1+γ)·U_i + δ. The policy itself is not
    checked for feasibility.

    Args:
        tiny: The instance.
        policy: Agents served on each atom.
        gamma: Multiplicative approximation factor.
        delta: Additive slack on every member's target; may be negative.

    Returns:
        The blocking coalition, or None.
    """
    if len(policy) != len(tiny.atoms):
        msg = f"Policy covers {len(policy)} atoms, instance has {len(tiny.atoms)}"
        raise ConfigurationError(msg)
    utilities = policy_utilities(tiny, policy)
    shares = np.asarray(tiny.shares, dtype=np.float64)
    members_list, _ = coalitions(tiny.n)
    for members in members_list:
        target = (1 + gamma) * utilities[list(members)] + delta
        if _blocks(tiny, members, target, float(shares[list(members)].sum())):
            logger.debug("Coalition %s blocks at γ=%g, δ=%g", members, gamma, delta)
            return members
    return None


def brute_force_core_oracle(tiny: TinyInstance, policy: ExAntePolicy, gamma: float, *, delta: float = 0.0) -> bool:
    """Decide exactly whether an explicit policy is in the (γ, δ)-approximate ex-ante core.

    A coalition S blocks when a policy of cost at most Σ_{i∈S} α_i gives every
    member strictly more than (1+γ) times its current utility plus δ; blocking
    policies may serve atoms fractionally.

    Returns:
        False if the policy is infeasible or some coalition blocks it.
    """
    if len(policy) != len(tiny.atoms):
        msg = f"Policy covers {len(policy)} atoms, instance has {len(tiny.atoms)}"
        raise ConfigurationError(msg)
    if _policy_cost(tiny, policy) > math.fsum(tiny.shares) + _TOLERANCE:
        logger.debug("Policy costs more than the total share")
        return False
    return blocking_coalition(tiny, policy, gamma, delta=delta) is None
