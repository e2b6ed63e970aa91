"""Command-line interface for cauchy-lab."""

import asyncio
import io
import logging
import sys
from pathlib import Path
from typing import Optional

import click
from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.table import Table

from cauchy_lab import __version__
from cauchy_lab.config import EnvSettings, ExperimentConfig, load_config
from cauchy_lab.core.errors import CauchyLabError, ConfigError, NonConvergenceError
from cauchy_lab.harness import (
    Report,
    format_value,
    run_boundary_sweep,
    run_carleson,
    run_condition,
    run_indices,
    run_norm,
    run_opnorm,
    run_stability_probe,
    write_report,
)

# stdout is reserved for CSV
console = Console(stderr=True)

EXIT_CONFIG = 2
EXIT_NONCONVERGED = 3
TABLE_ROWS = 40


def setup_logging(level: str = "INFO"):
    """Set up logging with rich handler."""
    logging.basicConfig(
        level=level,
        format="%(message)s",
        handlers=[RichHandler(rich_tracebacks=True, console=console)],
    )
    logging.getLogger().setLevel(level)


def resolve_log_level(
    flag: Optional[str], env: EnvSettings, experiment: Optional[ExperimentConfig] = None
) -> str:
    """--log-level, then CAUCHY_LAB_LOG_LEVEL, then the config's logging.level."""
    if flag or env.log_level:
        return (flag or env.log_level).upper()
    return experiment.logging.level if experiment is not None else "INFO"


@click.group()
@click.version_option(__version__, prog_name="cauchy-lab")
@click.option("--config", type=click.Path(exists=True), help="Experiment config (.yaml or .ini)")
@click.option("--seed", type=click.IntRange(min=0), default=None, help="Override the config seed")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="CSV output path")
@click.option("--log-level", default=None, help="Logging level")
@click.pass_context
def cli(
    ctx, config: Optional[str], seed: Optional[int], out: Optional[str], log_level: Optional[str]
):
    """Cauchy Lab - singular integrals on weighted variable Lebesgue spaces."""
    ctx.ensure_object(dict)

    env = EnvSettings()
    ctx.obj["env"] = env
    setup_logging(resolve_log_level(log_level, env))

    # Load configuration
    try:
        if config:
            experiment = load_config(Path(config))
        elif Path("experiment.yaml").exists():
            experiment = load_config(Path("experiment.yaml"))
        else:
            experiment = ExperimentConfig()
    except ConfigError as e:
        console.print(f"[red]✗[/red] Config error: {e}")
        ctx.exit(EXIT_CONFIG)
    setup_logging(resolve_log_level(log_level, env, experiment))

    if seed is None:
        seed = env.seed
    if seed is not None:
        experiment = experiment.model_copy(update={"seed": seed})
    ctx.obj["config"] = experiment
    ctx.obj["out"] = out or experiment.output


def _show(report: Report):
    table = Table(title=report.command)
    for column in report.columns:
        table.add_column(column)
    for row in report.rows[:TABLE_ROWS]:
        table.add_row(*[format_value(v) for v in row])
    console.print(table)
    if len(report.rows) > TABLE_ROWS:
        console.print(f"[dim]... {len(report.rows) - TABLE_ROWS} more rows in the CSV[/dim]")
    for row in report.summary:
        console.print(" ".join(format_value(v) for v in row[1:]))


def _emit(ctx, report: Report):
    """Write the CSV, show a table and exit with the report status."""
    config: ExperimentConfig = ctx.obj["config"]
    out = ctx.obj.get("out")
    buffer = io.StringIO()
    write_report(report, config, buffer)
    if out:
        with open(out, "w", newline="") as f:
            f.write(buffer.getvalue())
        _show(report)
        console.print(f"[green]✓[/green] Wrote {len(report.rows)} rows to {out}")
    else:
        sys.stdout.write(buffer.getvalue())
        sys.stdout.flush()

    if report.nonconverged:
        console.print("[yellow]⚠[/yellow] Non-convergence flags present")
        ctx.exit(EXIT_NONCONVERGED)


def _run(ctx, build):
    try:
        report = build()
    except NonConvergenceError as e:
        console.print(f"[red]✗[/red] {e}")
        ctx.exit(EXIT_NONCONVERGED)
    except ConfigError as e:
        console.print(f"[red]✗[/red] Config error: {e}")
        ctx.exit(EXIT_CONFIG)
    except CauchyLabError as e:
        console.print(f"[red]✗[/red] {type(e).__name__}: {e}")
        ctx.exit(1)
    _emit(ctx, report)


@cli.command()
@click.pass_context
def indices(ctx):
    """Matuszewska-Orlicz indices versus indices of powerlikeness."""
    workers = ctx.obj["env"].workers
    _run(ctx, lambda: asyncio.run(run_indices(ctx.obj["config"], workers)))


@cli.command()
@click.pass_context
def carleson(ctx):
    """Carleson constant of the curve across resolutions."""
    _run(ctx, lambda: run_carleson(ctx.obj["config"]))


@cli.command()
@click.pass_context
def norm(ctx):
    """Weighted Luxemburg norm of the configured function."""
    _run(ctx, lambda: run_norm(ctx.obj["config"]))


@cli.command()
@click.pass_context
def apcheck(ctx):
    """Muckenhoupt-type A_p(.) supremum and verdict."""
    _run(ctx, lambda: run_condition(ctx.obj["config"], "ap"))


@cli.command()
@click.pass_context
def hdcheck(ctx):
    """Hasto-Diening supremum and verdict."""
    _run(ctx, lambda: run_condition(ctx.obj["config"], "hd"))


@cli.command()
@click.pass_context
def opnorm(ctx):
    """Weighted operator norm estimates under mesh refinement."""
    _run(ctx, lambda: run_opnorm(ctx.obj["config"]))


@cli.command()
@click.pass_context
def sweep(ctx):
    """Khvedelidze (p, lambda) boundary sweep."""
    config = ctx.obj["config"]
    console.print(Panel.fit(
        f"[bold cyan]Boundary sweep[/bold cyan]\n"
        f"p: {config.sweep.p_values}\n"
        f"lambda: {config.sweep.lambdas}\n"
        f"meshes: {config.operator.meshes}",
        border_style="cyan",
    ))
    workers = ctx.obj["env"].workers
    _run(ctx, lambda: asyncio.run(run_boundary_sweep(config, workers)))


@cli.command()
@click.pass_context
def stability(ctx):
    """Margins and probe verdicts for w^(1+epsilon)."""
    workers = ctx.obj["env"].workers
    _run(ctx, lambda: asyncio.run(run_stability_probe(ctx.obj["config"], workers)))


def main():
    """Main entry point."""
    cli(obj={})


if __name__ == "__main__":
    main()
