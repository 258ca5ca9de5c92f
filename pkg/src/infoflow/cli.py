"""Command-line entry point (``infoflow``)."""

from __future__ import annotations

import logging
import sys
from pathlib import Path
from typing import Optional

import click

from . import pipeline as pl
from .scenarios import ConfigError, ScenarioConfig, builtin_scenarios, get_scenario


def _resolve(config: Optional[str], scenario: Optional[str], out: Optional[str], **overrides) -> tuple[ScenarioConfig, Path]:
    if config and scenario:
        raise ConfigError("pass either --config or --scenario, not both")
    if config:
        cfg = ScenarioConfig.load(config)
    elif scenario:
        cfg = get_scenario(scenario)
    elif out and (Path(out) / pl.PROVENANCE).exists():
        cfg = ScenarioConfig.load(Path(out) / pl.PROVENANCE)
    else:
        raise ConfigError("no configuration: pass --config, --scenario, or --out pointing at an existing bundle")
    changes = {k: v for k, v in overrides.items() if v is not None}
    if changes:
        cfg = cfg.replace(**changes)
    return cfg, Path(out) if out else Path("runs") / cfg.name


def _common(fn):
    opts = [
        click.option("--config", type=click.Path(exists=True, dir_okay=False), help="Scenario JSON (or a bundle's provenance.json)."),
        click.option("--scenario", help="Name of a builtin scenario."),
        click.option("--seed", type=int, help="Message RNG seed."),
        click.option("--alpha", type=float, help="Significance level of the CI tests."),
        click.option("--allow-concurrent/--no-concurrent", "allow_concurrent", default=None,
                     help="Permit or forbid same-tier edges."),
        click.option("--M", "M", type=int, help="Keep every M-th simulator step."),
        click.option("--workers", type=int, default=1, show_default=True, help="Threads for the skeleton search."),
        click.option("--out", type=click.Path(file_okay=False), help="Bundle directory (default runs/<name>)."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _run(stage_fns, config, scenario, seed, alpha, allow_concurrent, M, workers, out):
    try:
        cfg, path = _resolve(config, scenario, out, seed=seed, alpha=alpha, allow_concurrent=allow_concurrent, M=M)
    except (ConfigError, OSError) as exc:
        click.echo(f"error: [config] {exc}", err=True)
        sys.exit(2)
    try:
        for fn in stage_fns:
            if fn is pl.discover:
                fn(cfg, path, workers)
            else:
                fn(cfg, path)
    except pl.PipelineError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(str(path))


@click.group()
@click.option("-v", "--verbose", count=True, help="Repeat for more log output.")
def main(verbose: int) -> None:
    """Simulate advection-diffusion scenarios and recover their information flow."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.option("--json", "as_json", is_flag=True, help="Print full configs as JSON.")
def scenarios(as_json: bool) -> None:
    """List the builtin scenario catalog."""
    for name, cfg in builtin_scenarios().items():
        if as_json:
            click.echo(cfg.to_json(), nl=False)
        else:
            click.echo(f"{name:28s} {cfg.nx}x{cfg.ny} field={cfg.field} C={cfg.courant:g} M={cfg.M} "
                       f"kx={cfg.kappa_x:g} ky={cfg.kappa_y:g} concurrent={'yes' if cfg.allow_concurrent else 'no'}")


@main.command()
@_common
def simulate(**kw) -> None:
    """Generate the velocity field and benchmark dataset."""
    _run([pl.simulate], **kw)


@main.command()
@_common
def discover(**kw) -> None:
    """Run the skeleton search on a simulated bundle."""
    _run([pl.discover], **kw)


@main.command()
@_common
def analyze(**kw) -> None:
    """Build the summary graph and velocity estimates."""
    _run([pl.analyze], **kw)


@main.command()
@_common
def report(**kw) -> None:
    """Render SVG panels."""
    _run([pl.report], **kw)


@main.command()
@_common
def pipeline(**kw) -> None:
    """Run every stage: simulate, discover, analyze, report."""
    _run([pl.simulate, pl.discover, pl.analyze, pl.report], **kw)


if __name__ == "__main__":
    main()
