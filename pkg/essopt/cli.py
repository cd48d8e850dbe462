"""
Command-line interface for essopt.

Commands are registered with the @command decorator into COMMANDS; each
handler receives a Context and returns an exit code. Every EssoptError is
mapped to its exit code, anything else to EXIT_INTERNAL_ERROR.
"""

import argparse
import os
import sys
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from . import __version__
from .config import RunConfig, load_config
from .device import Schedule
from .errors import ConfigError, EssoptError
from .fixtures import generate_week
from .formulation import REPORT_MONEY_SCALE, Instance, build_model, optimize
from .logging import configure_logging, get_logger
from .lpformat import write_lp
from .reports import Report
from .status import EXIT_INFEASIBLE, EXIT_INTERNAL_ERROR, EXIT_OK, EXIT_STATUS_NAMES
from .strategy import baseline_schedule, bill_comparison, reop_window_sweep, weight_sweep
from .timeseries import Horizon, Profile, parse_profiles, render_profiles

logger = get_logger("essopt.cli")

FORMATS = ("csv", "json")

# Global registry of sub-commands
COMMANDS: Dict[str, "Command"] = {}

Argument = Tuple[Tuple[str, ...], dict]


class Command:
    """A registered sub-command."""

    def __init__(self, name: str, handler: Callable[["Context"], int], help: str,
                 arguments: Sequence[Argument] = ()):
        """
        Initialize a new command.

        Args:
            name: The sub-command name
            handler: Function called with the run Context
            help: One-line description for --help
            arguments: Extra (flags, kwargs) pairs for argparse
        """
        self.name = name
        self.handler = handler
        self.help = help
        self.arguments = tuple(arguments)


def command(name: str, help: str = "", arguments: Sequence[Argument] = ()) -> Callable:
    """
    Decorator to register a sub-command.

    Args:
        name: The sub-command name
        help: One-line description
        arguments: Extra (flags, kwargs) pairs for argparse

    Returns:
        A decorator function
    """
    def decorator(func: Callable[["Context"], int]) -> Callable[["Context"], int]:
        COMMANDS[name] = Command(name, func, help, arguments)
        return func
    return decorator


# ---------------- CONTEXT ----------------------
@dataclass
class Context:
    """Parsed arguments and the validated configuration of one run."""

    args: argparse.Namespace
    config: RunConfig

    @property
    def out(self) -> str:
        return self.args.out

    @property
    def format(self) -> str:
        return self.args.format

    @property
    def workers(self) -> int:
        return self.args.workers

    def write(self, report: Report) -> str:
        return report.write(os.path.join(self.out, report.name))

    def profiles(self) -> Tuple[Profile, Profile]:
        """
        PV and load over the configured horizon.

        --profiles wins over the config's profiles entry; with neither, the
        synthetic week of --seed is generated.
        """
        path = self.args.profiles or self.config.profiles
        horizon = self.config.horizon
        if path is None:
            logger.info(f"no profiles given, generating synthetic profiles with seed {self.args.seed}")
            return generate_week(self.args.seed, horizon.steps_per_day, self.config.site.pv_capacity,
                                 self.config.load_kw, horizon.days)
        try:
            with open(path, encoding="utf-8") as f:
                text = f.read()
        except OSError as e:
            raise ConfigError(f"cannot read {path}: {e.strerror}", "--profiles") from None
        return parse_profiles(text, horizon)

    def instance(self) -> Instance:
        """The run instance, narrowed to --day when given."""
        instance = self.config.instance(*self.profiles())
        if self.args.day is not None:
            if not 0 <= self.args.day < instance.horizon.days:
                raise ConfigError(f"day {self.args.day} outside 0..{instance.horizon.days - 1}", "--day")
            instance = instance.day(self.args.day)
        return instance


# ---------------- COMMANDS ---------------------
@command("optimize", "optimize the battery schedule (schedule.csv, objective.json)")
def optimize_command(ctx: Context) -> int:
    instance = ctx.instance()
    result = optimize(instance, ctx.config.solver)
    ctx.write(Report.text(result.schedule.to_csv(), "schedule.csv"))
    ctx.write(Report.json({
        "status": result.solution.status.value,
        "weights": list(instance.weights.as_tuple()),
        "objective": result.report.as_dict(),
        "objective_1e4": result.report.scaled(REPORT_MONEY_SCALE).as_dict(),
        "export_kwh": result.schedule.export_energy(),
        "nodes": result.solution.stats.nodes,
    }, "objective.json"))
    return EXIT_OK


@command("baseline", "run the baseline strategy and compare daily bills with the economic optimum")
def baseline_command(ctx: Context) -> int:
    instance = ctx.instance()
    ctx.write(Report.text(baseline_schedule(instance).to_csv(), "baseline.csv"))
    comparison = bill_comparison(instance, ctx.config.solver, ctx.workers)
    header = ("day", "baseline_cost", "optimized_cost", "reduction_percent")
    if ctx.format == "json":
        ctx.write(Report.json({
            "days": [dict(zip(header, row)) for row in comparison.rows()],
            "summary": comparison.summary(),
        }, "bills.json"))
    else:
        ctx.write(Report.csv(header, comparison.rows(), "bills.csv"))
    return EXIT_OK


@command("sweep-weights", "optimize under every configured weight set")
def sweep_weights_command(ctx: Context) -> int:
    rows = weight_sweep(ctx.instance(), ctx.config.sweep.weight_sets, ctx.config.solver, ctx.workers)
    header = ("alpha1", "alpha2", "alpha3", "F1", "F2", "F3", "F", "error")
    table = []
    for row in rows:
        values = row.report.scaled(REPORT_MONEY_SCALE).as_dict() if row.ok else {}
        table.append(row.weights.as_tuple() + tuple(values.get(k) for k in ("F1", "F2", "F3", "F"))
                     + (row.error,))
    if ctx.format == "json":
        ctx.write(Report.json([dict(zip(header, r)) for r in table], "weights.json"))
    else:
        ctx.write(Report.csv(header, table, "weights.csv"))
    failed = [r for r in rows if not r.ok]
    if failed:
        logger.warning(f"{len(failed)} of {len(rows)} weight sets failed")
    return EXIT_OK


@command("sweep-reop", "minimize grid export under each REOP window, day by day")
def sweep_reop_command(ctx: Context) -> int:
    result = reop_window_sweep(ctx.instance(), ctx.config.sweep.reop_windows, ctx.config.solver, ctx.workers)
    first_day = ctx.args.day or 0
    if ctx.format == "json":
        ctx.write(Report.json({
            "windows": [list(w) for w in result.windows],
            "exports_kwh": [list(row) for row in result.exports],
            "best": [{"day": first_day + d, "window": list(result.windows[b])} for d, b in enumerate(result.best)],
            "histogram_percent": list(result.histogram),
        }, "reop.json", money=False))
    else:
        rows = [(first_day + d, w[0], w[1], result.exports[d][i], int(result.best[d] == i))
                for d in range(len(result.exports)) for i, w in enumerate(result.windows)]
        ctx.write(Report.csv(("day", "window_start", "window_end", "export_kwh", "best"), rows, "reop.csv"))
        ctx.write(Report.csv(("window_start", "window_end", "share_percent"),
                             [(w[0], w[1], s) for w, s in zip(result.windows, result.histogram)],
                             "reop_histogram.csv"))
    return EXIT_OK


@command("validate", "check a schedule CSV against the configured constraints",
         [(("--schedule",), {"required": True, "metavar": "PATH", "help": "schedule CSV to check"})])
def validate_command(ctx: Context) -> int:
    instance = ctx.instance()
    try:
        with open(ctx.args.schedule, encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"cannot read {ctx.args.schedule}: {e.strerror}", "--schedule") from None
    schedule = Schedule.from_csv(text, instance.horizon)
    violations = instance.validate(schedule)
    rows = [(v.constraint.value, "" if v.step is None else v.step, v.detail) for v in violations]
    if ctx.format == "json":
        ctx.write(Report.json([dict(zip(("constraint", "step", "detail"), r)) for r in rows],
                              "violations.json", money=False))
    else:
        ctx.write(Report.csv(("constraint", "step", "detail"), rows, "violations.csv"))
    if violations:
        for v in violations[:10]:
            logger.error(str(v))
        logger.error(f"schedule has {len(violations)} violation(s)")
        return EXIT_INFEASIBLE
    logger.info("schedule is feasible")
    return EXIT_OK


@command("export-lp", "write the MILP in LP format (model.lp)")
def export_lp_command(ctx: Context) -> int:
    model, _ = build_model(ctx.instance())
    ctx.write(Report.text(write_lp(model), "model.lp"))
    return EXIT_OK


@command("generate-profiles", "write the seeded synthetic PV/load profiles (profiles.csv)")
def generate_profiles_command(ctx: Context) -> int:
    horizon: Horizon = ctx.config.horizon
    pv, load = generate_week(ctx.args.seed, horizon.steps_per_day, ctx.config.site.pv_capacity,
                             ctx.config.load_kw, horizon.days)
    ctx.write(Report.text(render_profiles(pv, load), "profiles.csv"))
    return EXIT_OK


# ---------------- PARSER -----------------------
def _common_arguments() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON run configuration")
    common.add_argument("--profiles", metavar="PATH", help="PV/load profile CSV")
    common.add_argument("--out", metavar="DIR", default=".", help="output directory (default: .)")
    common.add_argument("--format", choices=FORMATS, default="csv", help="report format (default: csv)")
    common.add_argument("--seed", type=int, default=0, help="seed for synthetic profiles (default: 0)")
    common.add_argument("--time-limit", type=float, metavar="SECONDS", help="solver wall-clock limit")
    common.add_argument("--day", type=int, help="optimize only this day of the horizon (0-based)")
    common.add_argument("--days", type=int, help="override the number of days in the horizon")
    common.add_argument("--workers", type=int, default=1, help="processes for sweeps (default: 1)")
    common.add_argument("--log-level", default="INFO", help="DEBUG, INFO, WARNING or ERROR")
    common.add_argument("--log-file", metavar="PATH", help="also log to this file")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="essopt", description="Day-ahead microgrid battery scheduling.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = _common_arguments()
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True
    for cmd in COMMANDS.values():
        p = sub.add_parser(cmd.name, parents=[common], help=cmd.help, description=cmd.help)
        for flags, kwargs in cmd.arguments:
            p.add_argument(*flags, **kwargs)
    return parser


def _load(args: argparse.Namespace) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    if args.workers < 1:
        raise ConfigError(f"must be at least 1, got {args.workers}", "--workers")
    horizon = None
    if args.days is not None:
        horizon = Horizon(args.days, config.horizon.steps_per_day)
    return config.with_overrides(args.time_limit, horizon)


def run(argv: Optional[List[str]] = None) -> int:
    """
    Run one command and return the process exit code.

    Args:
        argv: Arguments without the program name (default: sys.argv[1:])
    """
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level, log_file=args.log_file)
    try:
        ctx = Context(args, _load(args))
        logger.info(f"running {args.command}")
        return COMMANDS[args.command].handler(ctx)
    except EssoptError as e:
        logger.error(f"{EXIT_STATUS_NAMES[e.exit_code]}: {type(e).__name__}: {e}")
        return e.exit_code
    except Exception as e:
        logger.debug("internal error", exc_info=True)
        logger.error(f"internal error: {type(e).__name__}: {e}")
        return EXIT_INTERNAL_ERROR


def main(argv: Optional[List[str]] = None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
