"""Versioned document codecs for instances, profiles, traces and audit results.

Encoders return plain dicts and lists of JSON-compatible values; non-finite
floats are written as the strings "inf", "-inf" and "nan". Decoders accept the
parsed JSON and raise ConfigurationError on anything malformed.
"""

import json
import logging
import math
from collections.abc import Iterable, Mapping, Sequence

import numpy as np
import numpy.typing as npt

from pacecore.domain.core_audit import BlockingWitness, CoreCertificate, HalfSpaceWitness
from pacecore.domain.costs import (
    ConcaveCardinality,
    CostFunction,
    CostKind,
    ExplicitTable,
    ItemCoverage,
    ZeroOneSingleGood,
)
from pacecore.domain.deviation import DeviationReport
from pacecore.domain.equilibrium import FocalReport, PacingProfile
from pacecore.domain.errors import ConfigurationError
from pacecore.domain.mechanisms import MechanismKind
from pacecore.domain.model import DEFAULT_PERTURBATION, Atom, Box, Component, DistributionSpec, Instance, PermutedAtom
from pacecore.domain.reduction import SCALE, AgentSummary, SimulationResult, Trace
from pacecore.domain.regularity import ProbeReport
from pacecore.domain.strategies import Strategy, StrategyKind, TimeIndependentMap, Truthful, ValueScaling
from pacecore.domain.welfare import DwlScan

__all__ = [
    "CERTIFICATE_SCHEMA",
    "DEVIATION_SCHEMA",
    "FOCAL_SCHEMA",
    "INSTANCE_SCHEMA",
    "PROBE_SCHEMA",
    "PROFILE_SCHEMA",
    "SCAN_SCHEMA",
    "TRACE_SCHEMA",
    "certificate_to_document",
    "cost_from_document",
    "cost_to_document",
    "deviation_to_document",
    "focal_to_document",
    "instance_from_document",
    "instance_to_document",
    "probes_to_document",
    "profile_from_document",
    "profile_to_document",
    "read_document",
    "read_records",
    "result_from_records",
    "scan_to_document",
    "strategies_from_document",
    "summary_rows",
    "trace_to_records",
]

logger = logging.getLogger(__name__)

INSTANCE_SCHEMA = "pacecore-instance-v1"
TRACE_SCHEMA = "pacecore-trace-v1"
CERTIFICATE_SCHEMA = "pacecore-cert-v1"
PROFILE_SCHEMA = "pacecore-beta-v1"
SCAN_SCHEMA = "pacecore-scan-v1"
FOCAL_SCHEMA = "pacecore-focal-v1"
DEVIATION_SCHEMA = "pacecore-deviation-v1"
PROBE_SCHEMA = "pacecore-probe-v1"

_ALPHA_TOLERANCE = 1e-12
_PAIR = 2
_NON_FINITE = {"inf": math.inf, "-inf": -math.inf, "nan": math.nan}

type Json = dict[str, object]
type Matrix = tuple[tuple[float, ...], ...]


def _number(value: float) -> float | str:
    value = float(value)
    if math.isfinite(value):
        return value
    return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")


def _numbers(values: Iterable[float] | npt.NDArray[np.float64]) -> list[float | str]:
    return [_number(float(value)) for value in np.asarray(values, dtype=np.float64).ravel()]


def _mapping(value: object, what: str) -> Mapping[str, object]:
    if not isinstance(value, Mapping):
        msg = f"{what} must be a JSON object"
        raise ConfigurationError(msg)
    return value


def _list(value: object, what: str) -> list[object]:
    if not isinstance(value, list):
        msg = f"{what} must be a JSON array"
        raise ConfigurationError(msg)
    return value


def _field(document: Mapping[str, object], key: str) -> object:
    if key not in document:
        msg = f"Missing field '{key}'"
        raise ConfigurationError(msg)
    return document[key]


def _float(value: object, what: str) -> float:
    if isinstance(value, str) and value in _NON_FINITE:
        return _NON_FINITE[value]
    if isinstance(value, bool) or not isinstance(value, int | float):
        msg = f"{what} must be a number, got {value!r}"
        raise ConfigurationError(msg)
    return float(value)


def _int(value: object, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        msg = f"{what} must be an integer, got {value!r}"
        raise ConfigurationError(msg)
    return value


def _floats(value: object, what: str) -> tuple[float, ...]:
    return tuple(_float(item, what) for item in _list(value, what))


def _matrix(value: object, what: str) -> Matrix:
    return tuple(_floats(row, what) for row in _list(value, what))


def _schema(document: Mapping[str, object], expected: str) -> None:
    schema = document.get("schema")
    if schema != expected:
        msg = f"Expected schema '{expected}', got {schema!r}"
        raise ConfigurationError(msg)


def read_document(text: str) -> Mapping[str, object]:
    """Parse one JSON object.

    Raises:
        ConfigurationError: If the text is not a JSON object.
    """
    try:
        parsed = json.loads(text)
    except json.JSONDecodeError as error:
        msg = f"Invalid JSON at line {error.lineno}, column {error.colno}: {error.msg}"
        raise ConfigurationError(msg) from error
    return _mapping(parsed, "Document")


def read_records(text: str) -> list[Mapping[str, object]]:
    """Parse JSON lines, skipping blank lines.

    Raises:
        ConfigurationError: If a line is not a JSON object.
    """
    records = []
    for number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append(_mapping(json.loads(line), f"Line {number}"))
        except json.JSONDecodeError as error:
            msg = f"Invalid JSON on line {number}: {error.msg}"
            raise ConfigurationError(msg) from error
    return records


def cost_to_document(cost: CostFunction) -> Json:
    """Encode a cost function as {kind, ...parameters}."""
    match cost:
        case ItemCoverage(weights=weights, cap=cap):
            return {"kind": cost.kind.value, "weights": list(weights), "cap": cap}
        case ConcaveCardinality(steps=steps):
            return {"kind": cost.kind.value, "steps": list(steps)}
        case ExplicitTable(values=values):
            return {"kind": cost.kind.value, "values": list(values)}
        case _:
            return {"kind": cost.kind.value}


def cost_from_document(document: Mapping[str, object]) -> CostFunction:
    """Decode a cost function."""
    try:
        kind = CostKind(str(_field(document, "kind")))
    except ValueError:
        msg = f"Unknown cost kind {document.get('kind')!r}"
        raise ConfigurationError(msg) from None
    match kind:
        case CostKind.ZERO_ONE_SINGLE_GOOD:
            return ZeroOneSingleGood()
        case CostKind.ITEM_COVERAGE:
            return ItemCoverage(
                weights=_floats(_field(document, "weights"), "Coverage weights"),
                cap=_float(document.get("cap", 1.0), "Coverage cap"),
            )
        case CostKind.CONCAVE_CARDINALITY:
            return ConcaveCardinality(steps=_floats(_field(document, "steps"), "Cardinality steps"))
        case CostKind.EXPLICIT_TABLE:
            return ExplicitTable(values=_floats(_field(document, "values"), "Cost table"))


def _component_to_document(component: Component) -> Json:
    common: Json = {"prob": component.probability, "cost": component.cost_id}
    match component:
        case Atom(values=values):
            return {**common, "kind": "atom", "values": [list(row) for row in values]}
        case Box(low=low, high=high):
            intervals = [
                [[lo, hi] for lo, hi in zip(low_row, high_row, strict=True)]
                for low_row, high_row in zip(low, high, strict=True)
            ]
            return {**common, "kind": "box", "intervals": intervals}
        case PermutedAtom(base=base, jitter=jitter):
            return {**common, "kind": "permuted_atom", "base": list(base), "jitter": jitter}


def _component_from_document(document: Mapping[str, object]) -> Component:
    probability = _float(_field(document, "prob"), "Component probability")
    cost_id = _int(document.get("cost", 0), "Component cost")
    match document.get("kind"):
        case "atom":
            values = _matrix(_field(document, "values"), "Atom values")
            return Atom(probability=probability, values=values, cost_id=cost_id)
        case "box":
            rows = [
                [_floats(pair, "Box interval") for pair in _list(row, "Box intervals")]
                for row in _list(_field(document, "intervals"), "Box intervals")
            ]
            if any(len(pair) != _PAIR for row in rows for pair in row):
                msg = "Box intervals must be [low, high] pairs"
                raise ConfigurationError(msg)
            low = tuple(tuple(pair[0] for pair in row) for row in rows)
            high = tuple(tuple(pair[1] for pair in row) for row in rows)
            return Box(probability=probability, low=low, high=high, cost_id=cost_id)
        case "permuted_atom":
            return PermutedAtom(
                probability=probability,
                base=_floats(_field(document, "base"), "Permuted atom base"),
                jitter=_float(document.get("jitter", 0.0), "Permuted atom jitter"),
                cost_id=cost_id,
            )
        case other:
            msg = f"Unknown component kind {other!r}; use atom, box or permuted_atom"
            raise ConfigurationError(msg)


def _strategy_to_document(agent: int, strategy: Strategy) -> Json:
    match strategy:
        case ValueScaling(beta=beta):
            return {"agent": agent, "kind": strategy.kind.value, "beta": beta}
        case TimeIndependentMap(knots=knots, reports=reports):
            return {"agent": agent, "kind": strategy.kind.value, "knots": list(knots), "reports": list(reports)}
        case Truthful():
            return {"agent": agent, "kind": strategy.kind.value}
        case _:
            msg = f"Strategy of kind '{strategy.kind}' for agent {agent} cannot be written to an instance file"
            raise ConfigurationError(msg)


def _strategy_from_document(document: Mapping[str, object]) -> Strategy:
    match document.get("kind"):
        case StrategyKind.VALUE_SCALING:
            return ValueScaling(_float(_field(document, "beta"), "Scaling factor"))
        case StrategyKind.TRUTHFUL:
            return Truthful()
        case StrategyKind.TIME_INDEPENDENT_MAP:
            return TimeIndependentMap(
                knots=_floats(_field(document, "knots"), "Lookup knots"),
                reports=_floats(_field(document, "reports"), "Lookup reports"),
            )
        case other:
            msg = f"Unsupported strategy kind {other!r}; use value_scaling, truthful or time_independent_map"
            raise ConfigurationError(msg)


def instance_to_document(instance: Instance, strategies: Sequence[Strategy] | None = None) -> Json:
    """Encode an instance, and optionally a strategy profile, as a "pacecore-instance-v1" document."""
    document: Json = {
        "schema": INSTANCE_SCHEMA,
        "name": instance.name,
        "n": instance.n,
        "m": instance.m,
        "T": instance.horizon,
        "shares": list(instance.shares),
        "alpha_check": instance.alpha,
        "costs": [cost_to_document(cost) for cost in instance.costs],
        "distribution": {
            "components": [_component_to_document(component) for component in instance.dist.components],
            "eps": instance.dist.perturbation_eps,
        },
        "seed": instance.seed,
    }
    if strategies is not None:
        document["strategies"] = [_strategy_to_document(agent, strategy) for agent, strategy in enumerate(strategies)]
    return document


def instance_from_document(document: Mapping[str, object]) -> Instance:
    """Decode and validate a "pacecore-instance-v1" document.

    Raises:
        ConfigurationError: If the schema, a field or the resulting instance is invalid.
    """
    _schema(document, INSTANCE_SCHEMA)
    n = _int(_field(document, "n"), "n")
    m = _int(_field(document, "m"), "m")
    shares = _floats(_field(document, "shares"), "Shares")
    alpha_check = _float(_field(document, "alpha_check"), "alpha_check")
    if abs(alpha_check - math.fsum(shares)) > _ALPHA_TOLERANCE:
        msg = f"alpha_check {alpha_check!r} does not match the share total {math.fsum(shares)!r}"
        raise ConfigurationError(msg)
    distribution = _mapping(_field(document, "distribution"), "Distribution")
    costs = tuple(cost_from_document(_mapping(item, "Cost")) for item in _list(_field(document, "costs"), "Costs"))
    components = tuple(
        _component_from_document(_mapping(item, "Component"))
        for item in _list(_field(distribution, "components"), "Components")
    )
    dist = DistributionSpec(
        n=n,
        m=m,
        components=components,
        costs=costs,
        perturbation_eps=_float(distribution.get("eps", DEFAULT_PERTURBATION), "Perturbation width"),
    )
    instance = Instance(
        n=n,
        m=m,
        horizon=_int(_field(document, "T"), "T"),
        shares=shares,
        dist=dist,
        seed=_int(document.get("seed", 0), "Seed"),
        name=str(document.get("name", "instance")),
    )
    logger.debug("Decoded instance %s with n=%d, m=%d, T=%d", instance.name, n, m, instance.horizon)
    return instance


def strategies_from_document(document: Mapping[str, object], n: int) -> tuple[Strategy, ...] | None:
    """Decode the optional strategy profile of an instance document, one entry per agent.

    Returns:
        The strategies ordered by agent, or None when the document has none.
    """
    if "strategies" not in document:
        return None
    entries = [_mapping(item, "Strategy") for item in _list(document["strategies"], "Strategies")]
    agents = sorted(_int(_field(entry, "agent"), "Strategy agent") for entry in entries)
    if agents != list(range(n)):
        msg = f"Strategies must name every agent 0..{n - 1} exactly once, got {agents}"
        raise ConfigurationError(msg)
    by_agent = {_int(entry["agent"], "Strategy agent"): _strategy_from_document(entry) for entry in entries}
    return tuple(by_agent[agent] for agent in range(n))


def profile_to_document(profile: PacingProfile, kind: MechanismKind) -> Json:
    """Encode solver output; the document doubles as a pacing-vector input."""
    return {
        "schema": PROFILE_SCHEMA,
        "mechanism": kind.value,
        "beta": _numbers(profile.beta),
        "spend": _numbers(profile.spend),
        "residuals": _numbers(profile.residuals),
        "iterations": profile.iterations,
        "samples": profile.samples,
        "converged": profile.converged,
        "tol": profile.tol,
    }


def profile_from_document(document: Mapping[str, object]) -> PacingProfile:
    """Decode a "pacecore-beta-v1" document; only ``beta`` is required."""
    _schema(document, PROFILE_SCHEMA)
    beta = np.asarray(_floats(_field(document, "beta"), "Pacing vector"), dtype=np.float64)
    fixed = PacingProfile.fixed(beta)
    return PacingProfile(
        beta=beta,
        spend=np.asarray(_floats(document.get("spend", fixed.spend.tolist()), "Spend"), dtype=np.float64),
        residuals=np.asarray(
            _floats(document.get("residuals", fixed.residuals.tolist()), "Residuals"), dtype=np.float64
        ),
        iterations=_int(document.get("iterations", 0), "Iterations"),
        samples=_int(document.get("samples", 0), "Samples"),
        converged=bool(document.get("converged", True)),
        tol=_float(document.get("tol", fixed.tol), "Tolerance"),
    )


def trace_to_records(result: SimulationResult) -> list[Json]:
    """Encode a run as JSON-lines records: one "run" header, then one "round" record per retained round.

    Budgets, payments and costs are integer nano-units; divide by ``scale`` for currency.
    """
    trace = result.trace
    header: Json = {
        "schema": TRACE_SCHEMA,
        "record": "run",
        "mechanism": result.kind.value,
        "n": int(trace.values.shape[1]),
        "m": int(trace.values.shape[2]),
        "T": result.horizon,
        "seed": result.seed,
        "replication": result.replication,
        "stride": trace.stride,
        "scale": SCALE,
        "p_max_units": result.p_max_units,
        "initial_budgets": result.initial_budgets.tolist(),
        "final_budgets": result.final_budgets.tolist(),
        "total_cost_units": result.total_cost_units,
        "utilities": result.utilities.tolist(),
        "depletion_times": result.depletion_times.tolist(),
    }
    records = [header]
    records.extend(
        {
            "record": "round",
            "t": int(trace.rounds[row]),
            "cost_id": int(trace.cost_ids[row]),
            "values": trace.values[row].tolist(),
            "reports": trace.reports[row].tolist(),
            "unbounded": trace.unbounded[row].tolist(),
            "allocation": trace.allocations[row].tolist(),
            "payments": trace.payments[row].tolist(),
            "budgets_after": trace.budgets_after[row].tolist(),
            "depleted": trace.depleted[row].tolist(),
            "cost": int(trace.costs[row]),
        }
        for row in range(len(trace))
    )
    return records


def _column[T: np.generic](
    rows: Sequence[Mapping[str, object]],
    key: str,
    dtype: type[T],
    shape: tuple[int, ...],
) -> npt.NDArray[T]:
    try:
        array = np.asarray([row[key] for row in rows], dtype=dtype)
    except (KeyError, TypeError, ValueError) as error:
        msg = f"Trace rounds have a missing or malformed '{key}' column"
        raise ConfigurationError(msg) from error
    if array.shape != (len(rows), *shape):
        msg = f"Trace column '{key}' has shape {array.shape}, expected {(len(rows), *shape)}"
        raise ConfigurationError(msg)
    return array


def result_from_records(records: Sequence[Mapping[str, object]]) -> SimulationResult:
    """Rebuild a run from its JSON-lines records.

    Raises:
        ConfigurationError: If the header or a round record is malformed.
    """
    if not records:
        msg = "Trace is empty"
        raise ConfigurationError(msg)
    header, rows = records[0], records[1:]
    _schema(header, TRACE_SCHEMA)
    if _int(_field(header, "scale"), "Scale") != SCALE:
        msg = f"Trace uses scale {header['scale']}, expected {SCALE}"
        raise ConfigurationError(msg)
    if any(row.get("record") != "round" for row in rows):
        msg = "Every record after the header must be a round record"
        raise ConfigurationError(msg)
    n = _int(_field(header, "n"), "n")
    m = _int(_field(header, "m"), "m")
    try:
        kind = MechanismKind(str(_field(header, "mechanism")))
    except ValueError:
        msg = f"Unknown mechanism {header.get('mechanism')!r}"
        raise ConfigurationError(msg) from None
    trace = Trace(
        rounds=_column(rows, "t", np.int64, ()),
        values=_column(rows, "values", np.float64, (n, m)),
        reports=_column(rows, "reports", np.float64, (n, m)),
        unbounded=_column(rows, "unbounded", np.bool_, (n, m)),
        allocations=_column(rows, "allocation", np.bool_, (n, m)),
        payments=_column(rows, "payments", np.int64, (n,)),
        budgets_after=_column(rows, "budgets_after", np.int64, (n,)),
        depleted=_column(rows, "depleted", np.bool_, (n,)),
        cost_ids=_column(rows, "cost_id", np.int64, ()),
        costs=_column(rows, "cost", np.int64, ()),
        stride=_int(_field(header, "stride"), "Stride"),
    )
    return SimulationResult(
        kind=kind,
        horizon=_int(_field(header, "T"), "T"),
        seed=_int(_field(header, "seed"), "Seed"),
        replication=_int(_field(header, "replication"), "Replication"),
        p_max_units=_int(_field(header, "p_max_units"), "p_max_units"),
        trace=trace,
        initial_budgets=_column([header], "initial_budgets", np.int64, (n,))[0],
        final_budgets=_column([header], "final_budgets", np.int64, (n,))[0],
        total_cost_units=_int(_field(header, "total_cost_units"), "total_cost_units"),
        utilities=_column([header], "utilities", np.float64, (n,))[0],
        depletion_times=_column([header], "depletion_times", np.int64, (n,))[0],
    )


def summary_rows(summaries: Sequence[AgentSummary]) -> list[Json]:
    """Flat rows for the per-agent summary CSV."""
    return [
        {
            "agent": summary.agent,
            "share": summary.share,
            "utility": summary.utility,
            "spend": summary.spend,
            "depletion_time": summary.depletion_time,
        }
        for summary in summaries
    ]


def _half_space(witness: HalfSpaceWitness) -> Json:
    return {
        "S": list(witness.coalition),
        "verdict": witness.verdict.value,
        "slack": _number(witness.slack),
        "stderr": _number(witness.stderr),
        "tie": witness.tie,
        "witness": {
            "weights": _numbers(witness.weights),
            "threshold": _number(witness.threshold),
            "measure": _number(witness.measure),
            "target": _number(witness.target),
            "lhs": _number(witness.lhs),
            "rhs": _number(witness.rhs),
        },
    }


def _blocking(witness: BlockingWitness, gamma: float) -> Json:
    baseline = float(witness.baseline.sum())
    return {
        "S": list(witness.coalition),
        "weights": _numbers(witness.weights),
        "threshold": _number(witness.threshold),
        "cost": _number(witness.cost),
        "budget": _number(witness.budget),
        "baseline": _numbers(witness.baseline),
        "alternative": _numbers(witness.alternative),
        "ratios": _numbers(witness.ratios),
        "total_ratio": _number(float(witness.alternative.sum()) / baseline if baseline > 0 else math.inf),
        "margins": _numbers(witness.margins(gamma)),
    }


def certificate_to_document(certificate: CoreCertificate) -> Json:
    """Encode an ex-ante or ex-post certificate as a "pacecore-cert-v1" document."""
    ex_post = certificate.delta is not None
    if ex_post:
        coalitions = [
            {
                "S": list(candidate.coalition),
                "slack": _number(candidate.delta_at(certificate.gamma)),
                "stderr": _number(float(candidate.stderr.max()) if candidate.stderr.size else 0.0),
                "witness": _blocking(candidate, certificate.gamma),
            }
            for candidate in certificate.candidates
        ]
    else:
        coalitions = [_half_space(witness) for witness in certificate.witnesses]
    document: Json = {
        "schema": CERTIFICATE_SCHEMA,
        "audit": "ex_post" if ex_post else "ex_ante",
        "status": certificate.status.value,
        "gamma": _number(certificate.gamma),
        "samples": certificate.samples,
        "sampled_coalitions": certificate.sampled,
        "tie": certificate.tie,
        "blocking": None if certificate.blocking is None else _blocking(certificate.blocking, certificate.gamma),
        "offending": None if certificate.offending is None else list(certificate.offending),
        "coalitions": coalitions,
    }
    if ex_post:
        document["delta"] = _number(certificate.delta or 0.0)
        document["delta_star"] = _number(certificate.delta_star if certificate.delta_star is not None else math.nan)
        document["reference_scale"] = _number(certificate.reference_scale or 0.0)
        document["frontier"] = [{"delta": _number(d), "gamma": _number(g)} for d, g in certificate.frontier]
    return document


def scan_to_document(scan: DwlScan, *, n: int, m: int, cost: CostFunction) -> Json:
    """Encode a supremum dead-weight-loss scan."""
    return {
        "schema": SCAN_SCHEMA,
        "mechanism": scan.kind.value,
        "n": n,
        "m": m,
        "cost": cost_to_document(cost),
        "sup_estimate": _number(scan.sup_estimate),
        "upper_bound": _number(scan.upper_bound),
        "witness": scan.witness.values.tolist(),
        "profiles": scan.profiles,
        "exhaustive": scan.exhaustive,
        "payments_plus_excluded": None
        if scan.payments_plus_excluded is None
        else _number(scan.payments_plus_excluded),
    }


def focal_to_document(report: FocalReport, profile: PacingProfile, kind: MechanismKind) -> Json:
    """Encode a focal-behaviour check."""
    return {
        "schema": FOCAL_SCHEMA,
        "mechanism": kind.value,
        "beta": _numbers(profile.beta),
        "runs": report.runs,
        "T": report.horizon,
        "threshold": report.threshold,
        "early_depletion_fraction": report.early_depletion_fraction,
        "mean_spend": _numbers(report.mean_spend),
        "spend_ratio": _numbers(report.spend_ratio),
        "mean_utilities": _numbers(report.mean_utilities),
    }


def deviation_to_document(reports: Sequence[DeviationReport], kind: MechanismKind, alternative: str) -> Json:
    """Encode paired deviation estimates, one entry per horizon."""
    return {
        "schema": DEVIATION_SCHEMA,
        "mechanism": kind.value,
        "alternative": alternative,
        "estimates": [
            {
                "deviator": report.deviator,
                "T": report.horizon,
                "replications": report.replications,
                "mean": _number(report.mean),
                "half_width": _number(report.half_width),
                "lower": _number(report.lower),
                "upper": _number(report.upper),
                "baseline_overspends": report.baseline_overspends,
            }
            for report in reports
        ],
    }


def probes_to_document(reports: Sequence[ProbeReport], *, n: int, m: int) -> Json:
    """Encode regularity probes as {axiom, trials, status, witness?} records."""
    probes: list[Json] = []
    for report in reports:
        probe: Json = {
            "mechanism": report.kind.value,
            "axiom": report.axiom.value,
            "trials": report.trials,
            "status": report.status,
        }
        if report.witness is not None:
            probe["witness"] = {
                "agent": report.witness.agent,
                "reports": report.witness.reports.tolist(),
                "altered": None if report.witness.altered is None else report.witness.altered.tolist(),
                "detail": report.witness.detail,
            }
        probes.append(probe)
    return {"schema": PROBE_SCHEMA, "n": n, "m": m, "probes": probes}
