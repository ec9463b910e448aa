# src/main.py

import os
import sys
import logging
import argparse
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

# Add parent directory to sys.path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
from src.utils.config import load_config
from src.utils.errors import UsageError, ConfigurationError, ToleranceFailure, ParapdeError
from src.utils.metrics import HarnessMetrics
from src.harness.config import ExperimentConfig
from src.harness.runner import MonteCarloRunner
from src.harness.report import ExperimentReport, emit_report, BUILD_ID
from src.harness.experiments import SUBCOMMANDS, run_experiment
from src.harness.fixtures import regen_fixtures, check_fixtures

logger = logging.getLogger(__name__)
console = Console(stderr=True)

EXIT_PASS, EXIT_USAGE, EXIT_TOLERANCE = 0, 1, 2
MAX_TABLE_ROWS = 60


class CliParser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so bad usage maps to exit code 1."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from e


def build_parser():
    parser = CliParser(prog="parapde", description="Pseudospectral experiments for singular SPDEs on the torus")
    parser.add_argument("--config", help="Config file (default config.yaml at the repo root)")
    parser.add_argument("--seed", type=int, help="Master seed")
    parser.add_argument("--replicas", type=int, help="Monte-Carlo replicas")
    parser.add_argument("--workers", type=int, help="Worker threads")
    parser.add_argument("--out", help="Report file (default stdout)")
    parser.add_argument("--format", choices=["csv", "json"], help="Report format")
    parser.add_argument("--log-level", help="Logging level")
    sub = parser.add_subparsers(dest="command", parser_class=CliParser)

    for name in ("partition-check", "noise", "ou", "burgers", "renorm", "wick"):
        sub.add_parser(name, help=f"Run the {name} experiments")

    pam = sub.add_parser("pam", help="Generalized PAM: cross-method and renormalization checks")
    pam.add_argument("--n-levels", type=_int_list, help="Mollification levels, e.g. 4,8,16")
    pam.add_argument("--gamma", type=float)
    pam.add_argument("--F", dest="F", help="Nonlinearity: linear, linear:a or sine:a")
    pam.add_argument("--t-final", type=float)
    pam.add_argument("--dt", type=float)
    pam.add_argument("--renormalize", choices=["on", "off"])
    pam.add_argument("--method", choices=["direct", "transform", "paracontrolled"],
                     help="Emit per-time diagnostics of one solver instead of the checks")

    sbe = sub.add_parser("sbe", help="Stochastic Burgers: Galerkin cross-validation and tree expansion")
    sbe.add_argument("--gamma", type=float)
    sbe.add_argument("--n-level", type=int)
    sbe.add_argument("--t-final", type=float)
    sbe.add_argument("--dt", type=float)
    sbe.add_argument("--method", help="galerkin, paracontrolled or tree:k; emits per-time diagnostics")

    oracle = sub.add_parser("oracle", help="Regenerate or check the pinned fixtures")
    oracle.add_argument("action", choices=["regen", "check"])
    return parser


def merged_config(args):
    """File and environment settings, then CLI flags on top."""
    config = load_config(args.config)
    for key in ("seed", "replicas", "workers", "out", "format"):
        value = getattr(args, key, None)
        if value is not None:
            config[key] = value
    if args.command == "pam":
        flags = {"pam_levels": args.n_levels, "pam_gamma": args.gamma, "pam_F": args.F, "pam_t_final": args.t_final,
                 "pam_dt": args.dt, "pam_method": args.method}
        if args.renormalize is not None:
            flags["pam_renormalize"] = args.renormalize == "on"
    elif args.command == "sbe":
        flags = {"sbe_gamma": args.gamma, "sbe_n": args.n_level, "sbe_t_final": args.t_final, "sbe_dt": args.dt,
                 "sbe_method": args.method}
    else:
        flags = {}
    config.update({k: v for k, v in flags.items() if v is not None})
    return config


def experiments_for(args):
    if args.command == "pam" and args.method:
        return ("pam-trajectory",)
    if args.command == "sbe" and args.method:
        return ("sbe-trajectory",)
    return SUBCOMMANDS[args.command]


def display_report(report):
    """Display report rows in a table format"""
    table = Table(title="Report")
    for column, style in (("Experiment", "cyan"), ("Params", "white"), ("Statistic", "green"),
                          ("Value", "magenta"), ("Stderr", "magenta"), ("n", "white")):
        table.add_column(column, style=style)
    rows = report.sorted_rows()
    for row in rows[:MAX_TABLE_ROWS]:
        table.add_row(row.experiment, row.params, row.statistic, f"{row.value:.6g}", f"{row.stderr:.3g}", str(row.n))
    console.print(table)
    if len(rows) > MAX_TABLE_ROWS:
        console.print(f"[bold yellow]{len(rows) - MAX_TABLE_ROWS} more rows in the report output[/bold yellow]")


def display_failures(checks):
    table = Table(title="Failed checks")
    table.add_column("Check", style="red")
    table.add_column("Detail", style="white")
    for check in checks:
        table.add_row(check.name, check.detail)
    console.print(table)


def write_report(data, out):
    if out:
        with open(out, "wb") as fh:
            fh.write(data)
        console.print(f"[bold green]Report written to {out}[/bold green]")
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def run_oracle(action, config):
    fixtures_dir = config.get("fixtures_dir", "fixtures")
    if action == "regen":
        paths = regen_fixtures(fixtures_dir)
        console.print(f"[bold green]Wrote {', '.join(paths)}[/bold green]")
        return EXIT_PASS
    checks = check_fixtures(fixtures_dir)
    failed = [c for c in checks if not c.passed]
    if failed:
        display_failures(failed)
        return EXIT_TOLERANCE
    console.print(f"[bold green]{len(checks)} fixture entries match[/bold green]")
    return EXIT_PASS


def main(argv=None):
    """Main application entry point"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("A subcommand is required; see parapde --help")
        config = merged_config(args)
        level = args.log_level or config.get("log_level", "INFO")
        logging.basicConfig(level=getattr(logging, str(level).upper(), logging.INFO),
                            format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')

        if args.command == "oracle":
            return run_oracle(args.action, config)

        metrics = HarnessMetrics()
        runner = MonteCarloRunner(config.get("workers", 1), config.get("batch_size", 256), metrics)
        combined = ExperimentReport(metadata={"seed": config["seed"], "build": BUILD_ID, "experiments": {}})
        for name in experiments_for(args):
            cfg = ExperimentConfig.from_mapping(config, name)
            console.print(Panel.fit(f"[bold]{name}[/bold]\nseed={cfg.seed} replicas={cfg.replicas}",
                                    title="parapde"))
            report = run_experiment(cfg, runner)
            combined.extend(report)
            combined.metadata["experiments"][name] = report.metadata.get("wall_time")

        display_report(combined)
        write_report(emit_report(combined, config.get("format", "csv")), config.get("out"))
        metrics.export(config.get("metrics_path"))

        if combined.failures:
            display_failures(combined.failures)
            raise ToleranceFailure(f"{len(combined.failures)} checks failed", failures=combined.failures)
        console.print("[bold green]All checks passed[/bold green]")
        return EXIT_PASS
    except (UsageError, ConfigurationError) as e:
        console.print(f"[bold red]{e}[/bold red]")
        logger.debug("Usage error", exc_info=True)
        return EXIT_USAGE
    except ToleranceFailure as e:
        console.print(f"[bold red]{e}[/bold red]")
        return EXIT_TOLERANCE
    except ParapdeError as e:
        console.print(f"[bold red]Error: {str(e)}[/bold red]")
        logger.exception("Run failed")
        return EXIT_TOLERANCE


if __name__ == "__main__":
    sys.exit(main())
