"""Command-line entry point.

    entroflow <drive|ring|probes|verify> [--config cfg.yaml] --out DIR
              [--workers K] [--plots/--no-plots]

Exit codes: 0 success, 2 configuration error, 3 numerical failure
(solver, quadrature, or a failed verification check).
"""

from __future__ import annotations

import sys

import click

from .config import load_config
from .errors import ConfigError, EntroflowError
from .runner import run_experiment


def _run(experiment, config_path, out, workers, plots):
    try:
        config = load_config(config_path, experiment)
    except ConfigError as exc:
        click.echo(str(exc), err=True)
        sys.exit(2)
    try:
        outputs = run_experiment(config, out, workers=workers, plots=plots)
    except ConfigError as exc:
        click.echo(str(exc), err=True)
        sys.exit(2)
    except EntroflowError as exc:
        click.echo(str(exc), err=True)
        sys.exit(3)
    for path in outputs:
        click.echo(path)


def _common(fn):
    fn = click.option("--config", "config_path", type=click.Path(),
                      default=None, help="YAML config; defaults reproduce "
                      "the shipped experiment parameters.")(fn)
    fn = click.option("--out", required=True, type=click.Path(),
                      help="Output directory for CSVs, figures, manifest.")(fn)
    fn = click.option("--workers", default=1, show_default=True,
                      help="Sweep-level process parallelism.")(fn)
    fn = click.option("--plots/--no-plots", default=True, show_default=True,
                      help="Render SVG figures next to the CSVs.")(fn)
    return fn


@click.group()
@click.version_option()
def main():
    """Quantum transport currents with the corrected entropy flow."""


@main.command()
@_common
def drive(config_path, out, workers, plots):
    """Quasi-static resonant-level drive (entropy vs temperature)."""
    _run("drive", config_path, out, workers, plots)


@main.command()
@_common
def ring(config_path, out, workers, plots):
    """Flux-threaded ring bond currents and persistent entropy flow."""
    _run("ring", config_path, out, workers, plots)


@main.command()
@_common
def probes(config_path, out, workers, plots):
    """Floating thermoelectric probes: profiles and the Joule crossover."""
    _run("probes", config_path, out, workers, plots)


@main.command()
@_common
def verify(config_path, out, workers, plots):
    """Run the invariant suite and emit baseline CSVs."""
    _run("verify", config_path, out, workers, plots)


if __name__ == "__main__":
    main()
