"""
Command-line interface for the fockbench workbench.

This module provides commands for running the verification suites, the
scalar Mobius demo, and configuration management.
"""

import json
import logging
import sys
from collections import Counter
from pathlib import Path
from typing import List, Optional

import click
from rich.console import Console
from rich.json import JSON
from rich.panel import Panel
from rich.progress import Progress, SpinnerColumn, TextColumn
from rich.table import Table

from .config import TOLERANCE_FIELDS, WorkbenchSettings, load_settings, set_settings
from .exceptions import FockBenchError
from .models import REPORT_FORMATS, SUITES, CheckRecord, MobiusDemo, RunConfig
from .report import emit_report
from .suite import VerificationSuite, demo_mobius

console = Console()
logger = logging.getLogger(__name__)


def setup_logging(debug: bool = False, level: str = "INFO") -> None:
    """Setup logging configuration."""
    logging.basicConfig(
        level=logging.DEBUG if debug else getattr(logging, level, logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )


@click.group()
@click.option("--debug", is_flag=True, help="Enable debug logging")
@click.option(
    "--env-file", type=click.Path(exists=True), help="Path to a .env file with FOCKBENCH_ settings"
)
@click.pass_context
def cli(ctx: click.Context, debug: bool, env_file: Optional[str]) -> None:
    """
    fockbench: a numerical workbench for noncommutative operator models.

    Runs seeded verification suites for row contractions, their
    characteristic functions and the action of ball automorphisms, on
    truncated Fock spaces.
    """
    try:
        settings = load_settings(env_file=env_file)
        if debug:
            settings = WorkbenchSettings.from_dict({**settings.model_dump(), "debug": True})
    except Exception as e:
        console.print(f"[red]Configuration error: {e}[/red]")
        sys.exit(1)

    setup_logging(debug or settings.debug, settings.log_level)
    set_settings(settings)
    ctx.obj = settings


@cli.command()
@click.option("--n", "n", type=int, help="Number of variables")
@click.option("--m", "m", type=int, help="Coefficient dimension")
@click.option("--level", type=int, help="Truncation level N")
@click.option("--margin", type=int, help="Levels discarded before comparing (B)")
@click.option("--r", "r", type=float, help="Radius of the rR family")
@click.option("--trials", type=int, help="Random trials per suite")
@click.option("--seed", type=int, help="Base seed")
@click.option("--tol-scale", type=float, help="Multiplier for every tolerance")
@click.option(
    "--suite",
    "suites",
    multiple=True,
    type=click.Choice(SUITES + ("all",)),
    help="Suite to run (repeatable; default all)",
)
@click.option("--out", type=click.Path(dir_okay=False), help="Report path")
@click.option("--format", "fmt", type=click.Choice(REPORT_FORMATS), help="Report format")
@click.option(
    "--dump-artifacts", type=click.Path(file_okay=False), help="Directory for matrix dumps"
)
@click.option("--config", "config_file", type=click.Path(exists=True), help="JSON run config")
@click.option("--workers", type=int, help="Concurrent trials")
@click.option("--timings", is_flag=True, default=None, help="Record wall times per check")
@click.pass_context
def run(
    ctx: click.Context,
    n: Optional[int],
    m: Optional[int],
    level: Optional[int],
    margin: Optional[int],
    r: Optional[float],
    trials: Optional[int],
    seed: Optional[int],
    tol_scale: Optional[float],
    suites: tuple,
    out: Optional[str],
    fmt: Optional[str],
    dump_artifacts: Optional[str],
    config_file: Optional[str],
    workers: Optional[int],
    timings: Optional[bool],
) -> None:
    """
    Run the verification suites.

    Exits with status 0 iff every check passes.
    """
    settings: WorkbenchSettings = ctx.obj
    overrides = {
        "n": n,
        "m": m,
        "level": level,
        "margin": margin,
        "r": r,
        "trials": trials,
        "seed": seed,
        "tol_scale": tol_scale,
        "suites": list(suites) or None,
        "out": out,
        "format": fmt,
        "dump_artifacts": dump_artifacts,
        "workers": workers,
        "include_timings": timings or None,
    }
    try:
        if config_file:
            config = RunConfig.from_file(config_file, **overrides)
        else:
            given = {key: value for key, value in overrides.items() if value is not None}
            config = RunConfig(**given)
    except FockBenchError as e:
        console.print(f"[red]Invalid run configuration: {e.message}[/red]")
        if e.details:
            console.print(f"[yellow]Details: {json.dumps(e.details, default=str)}[/yellow]")
        sys.exit(2)
    except Exception as e:
        console.print(f"[red]Invalid run configuration: {e}[/red]")
        sys.exit(2)

    try:
        with Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            console=console,
            transient=True,
        ) as progress:
            task = progress.add_task(
                f"Running {len(config.suites)} suites x {config.trials} trials...", total=None
            )
            suite = VerificationSuite(config, settings)
            records = suite.run()
            progress.remove_task(task)

        text = emit_report(records, config, path=config.out, settings=suite.settings)
    except FockBenchError as e:
        console.print(f"[red]Run failed: {e.message}[/red]")
        sys.exit(1)

    display_summary(records)
    if not config.out:
        if config.format == "json":
            console.print(JSON(text))
        else:
            click.echo(text, nl=False)
    sys.exit(0 if all(record.passed for record in records) else 1)


def display_summary(records: List[CheckRecord]) -> None:
    """Per-suite pass counts and the worst failures."""
    totals: Counter = Counter()
    passed: Counter = Counter()
    for record in records:
        totals[record.suite] += 1
        passed[record.suite] += record.passed

    table = Table(show_header=True, header_style="bold magenta", title="Verification summary")
    table.add_column("Suite", style="green")
    table.add_column("Checks", justify="right")
    table.add_column("Passed", justify="right")
    table.add_column("Failed", justify="right")
    for suite in SUITES:
        if suite not in totals:
            continue
        failed = totals[suite] - passed[suite]
        color = "red" if failed else "dim"
        table.add_row(suite, str(totals[suite]), str(passed[suite]), f"[{color}]{failed}[/{color}]")
    console.print(table)

    failures = [record for record in records if not record.passed]
    if not failures:
        console.print("[green]All checks passed[/green]")
        return
    console.print(f"[red]{len(failures)} checks failed[/red]")
    for record in failures[:10]:
        error = record.params.get("error")
        detail = error if error else f"{record.residual:.3e} > {record.tolerance:.3e}"
        console.print(f"  {record.suite}.{record.check} (trial {record.trial}): {detail}")


@cli.command("demo-mobius")
@click.option("--t", "t", type=float, default=0.6, show_default=True, help="Scalar contraction")
@click.option("--level", type=int, default=12, show_default=True, help="Truncation level N")
@click.option("--margin", type=int, default=3, show_default=True, help="Levels discarded (B)")
@click.option("--mu", type=float, default=None, help="Mobius offset phi_X(0) [default: -t]")
@click.option("--max-level", type=int, default=None, help="Largest level tried [default: N + 120]")
@click.option("--json", "as_json", is_flag=True, help="Print JSON instead of tables")
def demo_mobius_command(
    t: float,
    level: int,
    margin: int,
    mu: Optional[float],
    max_level: Optional[int],
    as_json: bool,
) -> None:
    """The n = 1 reduction: Theta_T against (z - t)/(1 - t z), and transport residuals."""
    try:
        demo = demo_mobius(t=t, N=level, margin=margin, mu=mu, max_level=max_level)
    except FockBenchError as e:
        console.print(f"[red]Demo failed: {e.message}[/red]")
        sys.exit(1)

    if as_json:
        console.print(JSON(demo.model_dump_json(indent=2)))
    else:
        display_demo(demo)
    if not demo.passed:
        sys.exit(1)


def display_demo(demo: MobiusDemo) -> None:
    coefficients = Table(
        show_header=True, header_style="bold magenta", title="Fourier coefficients"
    )
    for column in ("k", "Theta_T", "Taylor", "K_T e_k", "deviation"):
        coefficients.add_column(column, justify="right")
    for row in demo.coefficients:
        coefficients.add_row(
            str(row.k),
            f"{row.theta:.12f}",
            f"{row.taylor:.12f}",
            f"{row.poisson:.12f}",
            f"{row.deviation:.2e}",
        )
    console.print(coefficients)

    residuals = Table(show_header=True, header_style="bold magenta", title="Transport residuals")
    for column in ("N", "res_theta", "res_K", "predicted"):
        residuals.add_column(column, justify="right")
    for row in demo.residuals:
        residuals.add_row(
            str(row.level), f"{row.res_theta:.3e}", f"{row.res_k:.3e}", f"{row.predicted_scale:.3e}"
        )
    console.print(residuals)

    status = "green" if demo.passed else "red"
    reached = demo.residuals[-1].level if demo.residuals else demo.level
    console.print(
        Panel(
            f"t = {demo.t}, mu = {demo.mu}, N = {demo.level}, B = {demo.margin}\n"
            f"max coefficient deviation: {demo.max_deviation:.2e}\n"
            f"residuals decrease with N: {demo.residuals_decrease}\n"
            f"[{status}]below {demo.tolerance:.1e} at N = {reached}: {demo.converged}[/{status}]",
            title="Mobius demo",
            expand=False,
        )
    )


@cli.command()
@click.option("--tol-scale", type=float, default=1.0, help="Show tolerances scaled by this factor")
@click.pass_context
def config_show(ctx: click.Context, tol_scale: float) -> None:
    """Display the effective settings."""
    settings: WorkbenchSettings = ctx.obj
    try:
        shown = settings.scaled(tol_scale) if tol_scale != 1.0 else settings
    except FockBenchError as e:
        console.print(f"[red]{e.message}[/red]")
        sys.exit(1)
    console.print(
        Panel(JSON(json.dumps(shown.model_dump(), indent=2)), title="Current Configuration")
    )


@cli.command()
@click.option(
    "--path", type=click.Path(dir_okay=False), default=".env.example", show_default=True,
    help="Where to write the template",
)
def config_template(path: str) -> None:
    """Generate a template .env file."""
    defaults = WorkbenchSettings.model_fields
    lines = ["# fockbench settings; every variable is optional", ""]
    lines.append("# Tolerances (multiplied by --tol-scale)")
    for name in TOLERANCE_FIELDS:
        lines.append(f"FOCKBENCH_{name.upper()}={defaults[name].default}")
    lines.extend(["", "# Sampling, runtime and logging"])
    for name, field in defaults.items():
        if name not in TOLERANCE_FIELDS:
            value = field.default
            rendered = str(value).lower() if isinstance(value, bool) else value
            lines.append(f"FOCKBENCH_{name.upper()}={rendered}")

    env_file = Path(path)
    env_file.write_text("\n".join(lines) + "\n")

    console.print(f"[green]Template configuration written to {env_file}[/green]")
    console.print("Copy to .env and adjust the values you need.")


def main() -> None:
    """Main entry point for the CLI."""
    try:
        cli()
    except KeyboardInterrupt:
        console.print("\n[yellow]Operation cancelled by user[/yellow]")
        sys.exit(1)
    except Exception as e:
        console.print(f"[red]Unexpected error: {e}[/red]")
        sys.exit(1)


if __name__ == "__main__":
    main()
