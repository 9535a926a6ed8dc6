"""Command use cases behind the pacecore CLI.

Each command reads its inputs through the file loader, runs one domain
operation and writes versioned artifacts below the output directory. Commands
return an ExitCode; ``run`` maps exceptions onto the same codes.
"""

import dataclasses
import logging
import os
from collections.abc import Callable, Mapping
from dataclasses import dataclass, replace
from enum import IntEnum
from pathlib import Path
from typing import Any

from pacecore.adapters.codecs import (
    certificate_to_document,
    deviation_to_document,
    focal_to_document,
    instance_from_document,
    instance_to_document,
    probes_to_document,
    profile_from_document,
    profile_to_document,
    read_document,
    read_records,
    result_from_records,
    scan_to_document,
    strategies_from_document,
    summary_rows,
    trace_to_records,
)
from pacecore.adapters.exporters import FileExporter, FileLoader, FileSizeLimitExceededError, PathTraversalError
from pacecore.adapters.formatters import formatter_for
from pacecore.application.export import export_to, load_from
from pacecore.application.format import Document, OutputFormat, format_as
from pacecore.domain.core_audit import (
    DEFAULT_DELTA_GRID,
    CertificateStatus,
    CoreCertificate,
    audit_ex_post,
    certify_ex_ante,
)
from pacecore.domain.costs import CostKind, ZeroOneSingleGood
from pacecore.domain.deviation import deviation_gain, deviation_strategy
from pacecore.domain.equilibrium import (
    DEFAULT_SCHEDULE,
    DEFAULT_TOLERANCE,
    NonConvergenceError,
    PacingProfile,
    estimate_spend,
    solve_pacing,
    verify_focal,
)
from pacecore.domain.errors import ConfigurationError, ThinnedTraceError
from pacecore.domain.instances import LowerBoundSpec, LowerBoundVariant, make_lower_bound
from pacecore.domain.mechanisms import MechanismKind
from pacecore.domain.model import Instance
from pacecore.domain.randomness import SEED_MASK
from pacecore.domain.reduction import feasibility_audit, simulate, summarize
from pacecore.domain.regularity import Axiom, regularity_probe
from pacecore.domain.strategies import Strategy, value_scaling_profile
from pacecore.domain.welfare import ScanGrid, dwl_sup_scan

__all__ = ["COMMANDS", "SEED_ENV", "ExitCode", "RunConfig", "run"]

logger = logging.getLogger(__name__)

SEED_ENV = "PACECORE_SEED"
DEFAULT_SPEND_SAMPLES = 10_000
DEFAULT_AUDIT_SAMPLES = 100_000


class ExitCode(IntEnum):
    """Process exit codes shared by every command."""

    OK = 0
    REFUTED = 1
    CONFIGURATION = 2
    RUNTIME = 3
    NON_CONVERGENCE = 4
    INCONCLUSIVE = 5


_DEFAULT_OUTPUTS = {
    "simulate": "trace.jsonl",
    "solve-beta": "beta.json",
    "verify-focal": "focal.json",
    "audit-ex-ante": "certificate.json",
    "audit-ex-post": "certificate.json",
    "dwl-scan": "scan.json",
    "regularity": "probes.json",
    "lb-instance": "instance.json",
    "deviation-test": "deviation.json",
}


@dataclass(frozen=True, kw_only=True)
class RunConfig:
    """Everything one command needs, with every path already resolved.

    Input paths are resolved against the working directory and output paths
    against ``out_dir``. ``seed`` is the override in force, if any; commands
    fall back to the instance seed.
    """

    command: str
    mechanism: MechanismKind = MechanismKind.MOULIN
    instance: Path | None = None
    trace: Path | None = None
    beta: Path | None = None
    beta_values: tuple[float, ...] | None = None
    out_dir: Path = Path()
    output: Path | None = None
    summary: Path | None = None
    seed: int | None = None
    horizon: int | None = None
    workers: int = 1
    replication: int = 0
    stride: int = 1
    tol: float = DEFAULT_TOLERANCE
    max_iters: int = 50
    schedule: tuple[int, ...] = DEFAULT_SCHEDULE
    samples: int | None = None
    runs: int = 200
    gamma: float = 0.0
    delta: float | None = None
    delta_grid: tuple[float, ...] = DEFAULT_DELTA_GRID
    n: int = 3
    resolution: int = 10
    upper: float = 1.0
    axioms: tuple[Axiom, ...] = ()
    trials: int = 10_000
    eps: float = 0.01
    alpha_prime: float = 0.45
    variant: LowerBoundVariant = LowerBoundVariant.ATOMIC
    deviator: int = 0
    alternative: str = "half"
    replications: int = 200
    horizons: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        """Validate the command and the numeric options shared by several commands."""
        if self.command not in _DEFAULT_OUTPUTS:
            msg = f"Unknown command '{self.command}'"
            raise ConfigurationError(msg)
        if self.workers < 1:
            msg = f"--workers must be at least 1, got {self.workers}"
            raise ConfigurationError(msg)
        if self.horizon is not None and self.horizon < 1:
            msg = f"--t must be positive, got {self.horizon}"
            raise ConfigurationError(msg)
        if self.seed is not None and not 0 <= self.seed <= SEED_MASK:
            msg = f"Seed must be a 64-bit unsigned integer, got {self.seed}"
            raise ConfigurationError(msg)

    @classmethod
    def from_options(cls, options: Mapping[str, object], environ: Mapping[str, str] | None = None) -> RunConfig:
        """Build a config from parsed options, resolving paths and the seed override.

        Options that are absent or None keep their defaults. The PACECORE_SEED
        environment variable takes precedence over a ``seed`` option.

        Raises:
            ConfigurationError: If an option or the seed variable is invalid.
        """
        environ = os.environ if environ is None else environ
        known = {field.name for field in dataclasses.fields(cls)}
        values: dict[str, Any] = {key: value for key, value in options.items() if key in known and value is not None}
        out_dir = Path(str(values.get("out_dir", "."))).resolve()
        values["out_dir"] = out_dir
        for key in ("instance", "trace", "beta"):
            if key in values:
                values[key] = Path(str(values[key])).resolve()
        for key in ("output", "summary"):
            if key in values:
                values[key] = (out_dir / Path(str(values[key]))).resolve()
        if SEED_ENV in environ:
            try:
                values["seed"] = int(environ[SEED_ENV])
            except ValueError:
                msg = f"{SEED_ENV} must be an integer, got {environ[SEED_ENV]!r}"
                raise ConfigurationError(msg) from None
        return cls(**values)

    def output_path(self, default: str | None = None) -> Path:
        """Where the command's main artifact goes."""
        return self.output or self.out_dir / (default or _DEFAULT_OUTPUTS[self.command])


def _load_instance(config: RunConfig, loader: FileLoader) -> tuple[Instance, tuple[Strategy, ...] | None]:
    if config.instance is None:
        msg = f"Command '{config.command}' needs --instance"
        raise ConfigurationError(msg)
    document = read_document(load_from(loader, config.instance))
    instance = instance_from_document(document)
    if config.horizon is not None:
        instance = replace(instance, horizon=config.horizon)
    logger.info("Loaded instance %s from %s", instance.name, config.instance)
    return instance, strategies_from_document(document, instance.n)


def _profile(config: RunConfig, loader: FileLoader, instance: Instance) -> PacingProfile:
    """The pacing vector from --beta or --beta-values, solving for it when neither is given."""
    if config.beta is not None:
        profile = profile_from_document(read_document(load_from(loader, config.beta)))
    elif config.beta_values is not None:
        profile = PacingProfile.fixed(config.beta_values)
    else:
        logger.info("No pacing vector given; solving for the focal equilibrium")
        return solve_pacing(instance, config.mechanism, config.tol, config.max_iters, seed=config.seed)
    if profile.beta.shape != (instance.n,):
        msg = f"Pacing vector has {profile.beta.size} entries for {instance.n} agents"
        raise ConfigurationError(msg)
    return profile


def _write(exporter: FileExporter, path: Path, document: Document, output: OutputFormat = OutputFormat.JSON) -> None:
    export_to(exporter, path, format_as(formatter_for(output), document))


def _status_code(certificate: CoreCertificate) -> ExitCode:
    match certificate.status:
        case CertificateStatus.CERTIFIED:
            return ExitCode.OK
        case CertificateStatus.REFUTED:
            return ExitCode.REFUTED
        case CertificateStatus.INCONCLUSIVE:
            return ExitCode.INCONCLUSIVE


def cmd_simulate(config: RunConfig) -> ExitCode:
    """Run one replication and write its trace and per-agent summary."""
    loader, exporter = FileLoader(), FileExporter(config.out_dir)
    instance, strategies = _load_instance(config, loader)
    if config.beta is not None or config.beta_values is not None:
        strategies = value_scaling_profile(_profile(config, loader, instance).beta)
    elif strategies is None:
        logger.info("No strategies given; every agent reports truthfully")
        strategies = value_scaling_profile([1.0] * instance.n)
    result = simulate(
        instance,
        config.mechanism,
        strategies,
        seed=config.seed,
        replication=config.replication,
        stride=config.stride,
    )
    if not feasibility_audit(result, instance):
        logger.error("Run failed its feasibility audit")
        return ExitCode.RUNTIME
    _write(exporter, config.output_path(), trace_to_records(result), OutputFormat.JSONL)
    summary = config.summary or config.out_dir / "summary.csv"
    _write(exporter, summary, summary_rows(summarize(result, instance.shares)), OutputFormat.CSV)
    return ExitCode.OK


def cmd_solve_beta(config: RunConfig) -> ExitCode:
    """Solve for the focal pacing vector and check its spend on fresh i.i.d. samples."""
    loader, exporter = FileLoader(), FileExporter(config.out_dir)
    instance, _ = _load_instance(config, loader)
    try:
        profile = solve_pacing(
            instance,
            config.mechanism,
            config.tol,
            config.max_iters,
            schedule=config.schedule,
            seed=config.seed,
        )
    except NonConvergenceError as error:
        _write(exporter, config.output_path(), profile_to_document(error.profile, config.mechanism))
        logger.warning("%s", error)
        return ExitCode.NON_CONVERGENCE
    samples = config.samples or DEFAULT_SPEND_SAMPLES
    check = estimate_spend(instance, config.mechanism, profile, samples, seed=config.seed, workers=config.workers)
    document = profile_to_document(profile, config.mechanism)
    document["verification"] = {
        "samples": check.samples,
        "spend": check.mean.tolist(),
        "half_width": check.half_width.tolist(),
        "shares": list(instance.shares),
    }
    _write(exporter, config.output_path(), document)
    return ExitCode.OK


def cmd_verify_focal(config: RunConfig) -> ExitCode:
    """Simulate a pacing vector repeatedly and report early depletion and spend."""
    loader, exporter = FileLoader(), FileExporter(config.out_dir)
    instance, _ = _load_instance(config, loader)
    profile = _profile(config, loader, instance)
    report = verify_focal(instance, config.mechanism, profile, config.runs, seed=config.seed, workers=config.workers)
    _write(exporter, config.output_path(), focal_to_document(report, profile, config.mechanism))
    return ExitCode.OK


def cmd_audit_ex_ante(config: RunConfig) -> ExitCode:
    """Certify or refute ex-ante core membership of a pacing vector."""
    loader, exporter = FileLoader(), FileExporter(config.out_dir)
    instance, _ = _load_instance(config, loader)
    profile = _profile(config, loader, instance)
    certificate = certify_ex_ante(
        instance,
        config.mechanism,
        profile,
        config.gamma,
        config.samples or DEFAULT_AUDIT_SAMPLES,
        seed=config.seed,
        workers=config.workers,
    )
    _write(exporter, config.output_path(), certificate_to_document(certificate))
    return _status_code(certificate)


def cmd_audit_ex_post(config: RunConfig) -> ExitCode:
    """Search a recorded trace for blocking coalitions."""
    loader, exporter = FileLoader(), FileExporter(config.out_dir)
    instance, _ = _load_instance(config, loader)
    if config.trace is None:
        msg = "Command 'audit-ex-post' needs --trace"
        raise ConfigurationError(msg)
    result = result_from_records(read_records(load_from(loader, config.trace)))
    beta = None
    if config.beta is not None or config.beta_values is not None:
        beta = _profile(config, loader, instance)
    certificate = audit_ex_post(
        result,
        replace(instance, horizon=result.horizon),
        config.gamma,
        config.delta,
        delta_grid=config.delta_grid,
        beta=beta,
        seed=config.seed,
        workers=config.workers,
    )
    _write(exporter, config.output_path(), certificate_to_document(certificate))
    return _status_code(certificate)


def cmd_dwl_scan(config: RunConfig) -> ExitCode:
    """Estimate the supremum dead-weight loss of a mechanism.

    With --instance the scan uses the instance's shape and first cost;
    otherwise it scans n agents and one good under the 0-1 cost.
    """
    loader, exporter = FileLoader(), FileExporter(config.out_dir)
    if config.instance is not None:
        instance, _ = _load_instance(config, loader)
        n, m, cost = instance.n, instance.m, instance.costs[0]
    else:
        n, m, cost = config.n, 1, ZeroOneSingleGood()
    grid = ScanGrid(upper=config.upper, resolution=config.resolution, samples=config.samples or ScanGrid.samples)
    scan = dwl_sup_scan(config.mechanism, n, m, cost, grid, seed=config.seed or 0, workers=config.workers)
    _write(exporter, config.output_path(), scan_to_document(scan, n=n, m=m, cost=cost))
    return ExitCode.OK


def cmd_regularity(config: RunConfig) -> ExitCode:
    """Probe the regularity axioms; any counterexample exits with code 1.

    With --instance, the checks draw the instance's agent count, good count
    and first cost function. Equal treatment is skipped, and refused when
    asked for, unless that cost is the single-good 0-1 cost.
    """
    exporter = FileExporter(config.out_dir)
    n, m, cost = config.n, 1, None
    if config.instance is not None:
        instance, _ = _load_instance(config, FileLoader())
        n, m, cost = instance.n, instance.m, instance.costs[0]
        if len(instance.costs) > 1:
            logger.info("Instance has %d cost functions; checking the first", len(instance.costs))
    zero_one = cost is None or (m == 1 and cost.kind is CostKind.ZERO_ONE_SINGLE_GOOD)
    axioms = config.axioms or tuple(axiom for axiom in Axiom if zero_one or axiom is not Axiom.ET)
    if not zero_one and Axiom.ET in axioms:
        msg = "Equal treatment is checked under the single-good 0-1 cost only"
        raise ConfigurationError(msg)
    reports = [
        regularity_probe(
            config.mechanism,
            axiom,
            config.trials,
            n=n,
            m=m,
            cost=cost,
            seed=config.seed or 0,
            workers=config.workers,
        )
        for axiom in axioms
    ]
    _write(exporter, config.output_path(), probes_to_document(reports, n=n, m=m))
    failed = [report.axiom.value for report in reports if not report.passed]
    if failed:
        logger.warning("Counterexamples found for %s on %s", ", ".join(failed), config.mechanism)
        return ExitCode.REFUTED
    return ExitCode.OK


def cmd_lb_instance(config: RunConfig) -> ExitCode:
    """Write a lower-bound instance with its intended value-scaling profile."""
    exporter = FileExporter(config.out_dir)
    spec = LowerBoundSpec(
        n=config.n,
        eps=config.eps,
        alpha_prime=config.alpha_prime,
        variant=config.variant,
        horizon=config.horizon or LowerBoundSpec.horizon,
        seed=config.seed or 0,
    )
    instance = make_lower_bound(spec)
    scaling = 1.0 - config.eps if config.variant is LowerBoundVariant.SMOOTHED else 1.0
    strategies = value_scaling_profile([scaling] * instance.n)
    _write(exporter, config.output_path(), instance_to_document(instance, strategies))
    return ExitCode.OK


def cmd_deviation_test(config: RunConfig) -> ExitCode:
    """Estimate one agent's gain from deviating at each requested horizon."""
    loader, exporter = FileLoader(), FileExporter(config.out_dir)
    instance, _ = _load_instance(config, loader)
    profile = _profile(config, loader, instance)
    if not 0 <= config.deviator < instance.n:
        msg = f"--deviator {config.deviator} is not an agent of an instance with {instance.n} agents"
        raise ConfigurationError(msg)
    try:
        alternative = deviation_strategy(config.alternative, float(profile.beta[config.deviator]))
    except ValueError as error:
        raise ConfigurationError(str(error)) from error
    horizons = config.horizons or (instance.horizon,)
    reports = [
        deviation_gain(
            instance,
            config.mechanism,
            profile,
            config.deviator,
            alternative,
            config.replications,
            horizon,
            seed=config.seed,
            workers=config.workers,
            check_baseline=True,
        )
        for horizon in horizons
    ]
    _write(exporter, config.output_path(), deviation_to_document(reports, config.mechanism, config.alternative))
    return ExitCode.OK


COMMANDS: dict[str, Callable[[RunConfig], ExitCode]] = {
    "simulate": cmd_simulate,
    "solve-beta": cmd_solve_beta,
    "verify-focal": cmd_verify_focal,
    "audit-ex-ante": cmd_audit_ex_ante,
    "audit-ex-post": cmd_audit_ex_post,
    "dwl-scan": cmd_dwl_scan,
    "regularity": cmd_regularity,
    "lb-instance": cmd_lb_instance,
    "deviation-test": cmd_deviation_test,
}


def run(config: RunConfig) -> ExitCode:
    """Run a command and map failures onto exit codes.

    Configuration, path and file errors give 2, solver non-convergence gives 4
    and anything else 3. The message goes to the log; the caller reports it.
    """
    try:
        return COMMANDS[config.command](config)
    except NonConvergenceError:
        logger.exception("Pacing solver did not converge")
        return ExitCode.NON_CONVERGENCE
    except (
        ConfigurationError,
        ThinnedTraceError,
        PathTraversalError,
        FileSizeLimitExceededError,
        OSError,
    ) as error:
        logger.warning("%s", error)
        return ExitCode.CONFIGURATION
    except Exception:
        logger.exception("Command '%s' failed", config.command)
        return ExitCode.RUNTIME
