"""Command-line front door: ``pacecore <command> [options]``."""

import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

from pacecore.commands import ExitCode, RunConfig, run
from pacecore.domain.errors import ConfigurationError
from pacecore.domain.instances import LowerBoundVariant
from pacecore.domain.mechanisms import MechanismKind
from pacecore.domain.regularity import Axiom

__all__ = ["build_parser", "main"]

_LOG_LEVELS = (logging.WARNING, logging.INFO, logging.DEBUG)


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(item) for item in text.split(",") if item.strip())
    except ValueError:
        msg = f"expected comma-separated numbers, got '{text}'"
        raise argparse.ArgumentTypeError(msg) from None


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(item) for item in text.split(",") if item.strip())
    except ValueError:
        msg = f"expected comma-separated integers, got '{text}'"
        raise argparse.ArgumentTypeError(msg) from None


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--instance", type=Path, help="instance JSON (schema pacecore-instance-v1)")
    common.add_argument(
        "--mech",
        dest="mechanism",
        type=MechanismKind,
        choices=list(MechanismKind),
        default=MechanismKind.MOULIN,
        help="mechanism run every round (default: moulin)",
    )
    common.add_argument("--beta", type=Path, help="pacing vector JSON written by solve-beta")
    common.add_argument("--beta-values", type=_floats, help="pacing vector as comma-separated numbers")
    common.add_argument("--out", dest="out_dir", type=Path, default=Path(), help="output directory (default: .)")
    common.add_argument("--output", type=Path, help="main artifact path, relative to the output directory")
    common.add_argument("--seed", type=int, help="64-bit run seed; PACECORE_SEED takes precedence")
    common.add_argument("--t", dest="horizon", type=int, help="override the instance horizon T")
    common.add_argument("--workers", type=int, default=1, help="worker processes (default: 1)")
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v for progress, -vv for debug output")
    return common


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser with one subcommand per experiment."""
    common = _common_options()
    parser = argparse.ArgumentParser(
        prog="pacecore",
        description="Artificial-currency pacing: simulate, solve pacing equilibria and audit the core.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser("simulate", parents=[common], help="run one replication and write its trace")
    simulate.add_argument("--summary", type=Path, help="summary CSV path (default: summary.csv)")
    simulate.add_argument("--replication", type=int, help="replication index (default: 0)")
    simulate.add_argument("--stride", type=int, help="keep every k-th round in the trace (default: 1)")

    solve = commands.add_parser("solve-beta", parents=[common], help="solve for the focal pacing vector")
    solve.add_argument("--tol", type=float, help="largest accepted spend residual (default: 1e-3)")
    solve.add_argument("--max-iters", type=int, help="total Gauss-Seidel sweeps (default: 50)")
    solve.add_argument("--schedule", type=_ints, help="batch sizes of the solver stages (default: 10000,100000)")
    solve.add_argument("--samples", type=int, help="fresh samples for the spend check (default: 10000)")

    focal = commands.add_parser("verify-focal", parents=[common], help="check early depletion of a pacing vector")
    focal.add_argument("--runs", type=int, help="seeded replications (default: 200)")

    ex_ante = commands.add_parser("audit-ex-ante", parents=[common], help="certify the ex-ante core")
    ex_ante.add_argument("--gamma", type=float, help="multiplicative slack γ (default: 0)")
    ex_ante.add_argument("--samples", type=int, help="Monte Carlo draws (default: 100000)")

    ex_post = commands.add_parser("audit-ex-post", parents=[common], help="search a trace for blocking coalitions")
    ex_post.add_argument("--trace", type=Path, help="trace JSONL written by simulate")
    ex_post.add_argument("--gamma", type=float, help="multiplicative slack γ (default: 0)")
    ex_post.add_argument("--delta", type=float, help="additive slack δ (default: n·sqrt(log T / T))")
    ex_post.add_argument("--delta-grid", type=_floats, help="δ values of the reported frontier")

    scan = commands.add_parser("dwl-scan", parents=[common], help="estimate the supremum dead-weight loss")
    scan.add_argument("--n", type=int, help="number of agents when no instance is given (default: 3)")
    scan.add_argument("--resolution", type=int, help="grid steps per coordinate (default: 10)")
    scan.add_argument("--samples", type=int, help="random profiles when the grid is too large (default: 10000)")
    scan.add_argument("--upper", type=float, help="largest report (default: 1)")

    regularity = commands.add_parser("regularity", parents=[common], help="probe the regularity axioms")
    regularity.add_argument(
        "--axiom",
        dest="axioms",
        type=Axiom,
        choices=list(Axiom),
        action="append",
        help="axiom to probe; repeat for several (default: all)",
    )
    regularity.add_argument("--trials", type=int, help="random profiles per axiom (default: 10000)")
    regularity.add_argument("--n", type=int, help="number of agents when no instance is given (default: 3)")

    lower = commands.add_parser("lb-instance", parents=[common], help="write a lower-bound instance")
    lower.add_argument("--n", type=int, help="number of agents (default: 3)")
    lower.add_argument("--eps", type=float, help="harmonic offset ε (default: 0.01)")
    lower.add_argument("--alpha-prime", type=float, help="shared-round probability of the smoothed variant")
    lower.add_argument("--variant", type=LowerBoundVariant, choices=list(LowerBoundVariant), help="default: atomic")

    deviation = commands.add_parser("deviation-test", parents=[common], help="estimate a unilateral deviation gain")
    deviation.add_argument("--deviator", type=int, help="deviating agent (default: 0)")
    deviation.add_argument(
        "--alternative",
        help="half, double, truthful, baseline or a scaling factor (default: half)",
    )
    deviation.add_argument("--replications", type=int, help="paired runs per horizon (default: 200)")
    deviation.add_argument("--horizons", type=_ints, help="comma-separated horizons (default: the instance T)")
    return parser


def _configure_logging(verbosity: int) -> None:
    level = _LOG_LEVELS[min(verbosity, len(_LOG_LEVELS) - 1)]
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def main(argv: Sequence[str] | None = None) -> int:
    """Parse arguments, run one command and return its exit code."""
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    options = {key: tuple(value) if isinstance(value, list) else value for key, value in vars(args).items()}
    try:
        config = RunConfig.from_options(options)
    except ConfigurationError as error:
        sys.stderr.write(f"pacecore: {error}\n")
        return ExitCode.CONFIGURATION
    return int(run(config))
