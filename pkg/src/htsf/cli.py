"""Command-line entry points: validate, synth, run, report.

Exit codes: 0 success, 1 user error (bad config, bad data, bad usage),
2 internal error. Flags given to `run` override the corresponding config
fields; `HTSF_THREADS` overrides the worker count from either source.
"""

from __future__ import annotations

import sys

import click

from .config import (
    VALID_FAMILIES,
    VALID_RECONCILIATIONS,
    ConfigError,
    apply_overrides,
    load_config,
)
from .runner import report_artifact, run_pipeline
from .synth import SynthSpec, write_bottom_order, write_edges_csv, write_sales_csv


@click.group()
def cli():
    """Hierarchical time-series forecasting pipeline."""


@cli.command()
@click.argument("config_path", type=click.Path())
def validate(config_path):
    """Check a config file and the data files it points at."""
    load_config(config_path)
    click.echo("OK")


@cli.command()
@click.option("--hierarchies", type=int, required=True, help="Number of hierarchies.")
@click.option("--bottoms", type=int, required=True, help="Bottom series per hierarchy.")
@click.option("--length", "t_len", type=int, required=True, help="Series length T.")
@click.option("--noise", type=float, default=0.5, show_default=True)
@click.option("--sharing", type=float, default=0.8, show_default=True,
              help="Weight of the common signal, 0..1.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(), help="Sales CSV to write.")
@click.option("--edges-out", type=click.Path(), default=None,
              help="Also write the hierarchy edge file.")
@click.option("--bottom-out", type=click.Path(), default=None,
              help="Also write the bottom order file.")
def synth(hierarchies, bottoms, t_len, noise, sharing, seed, out, edges_out, bottom_out):
    """Generate a deterministic synthetic sales panel."""
    spec = SynthSpec(
        hierarchies=hierarchies, bottoms=bottoms, T=t_len,
        noise=noise, sharing=sharing, seed=seed,
    )
    write_sales_csv(spec, out)
    if edges_out:
        write_edges_csv(spec, edges_out)
    if bottom_out:
        write_bottom_order(spec, bottom_out)
    click.echo(f"wrote {out}")


def _parse_list(value, valid, field):
    if value is None:
        return None
    items = tuple(part.strip() for part in value.split(",") if part.strip())
    bad = [item for item in items if item not in valid]
    if bad:
        raise ConfigError(f"{field}: unknown value(s) {bad}; choose from {valid}")
    if not items:
        raise ConfigError(f"{field}: must not be empty")
    return items


@cli.command()
@click.argument("config_path", type=click.Path())
@click.option("--seed", type=int, default=None)
@click.option("--output-dir", type=click.Path(), default=None)
@click.option("--workers", type=int, default=None)
@click.option("--lags", type=int, default=None)
@click.option("--holdout", type=int, default=None)
@click.option("--families", default=None, help="Comma-separated model families.")
@click.option("--reconciliations", default=None, help="Comma-separated methods.")
@click.option("--grid-search/--no-grid-search", "grid", default=None)
def run(config_path, seed, output_dir, workers, lags, holdout, families,
        reconciliations, grid):
    """Execute the full pipeline and print the results table."""
    config = load_config(config_path)
    config = apply_overrides(
        config,
        seed=seed,
        output_dir=output_dir,
        workers=workers,
        lags=lags,
        holdout=holdout,
        families=_parse_list(families, VALID_FAMILIES, "families"),
        reconciliations=_parse_list(
            reconciliations, VALID_RECONCILIATIONS, "reconciliations"
        ),
        grid_search=grid,
    )
    result = run_pipeline(config)
    click.echo(result.table_text, nl=False)
    click.echo(f"artifact: {result.output_dir}")


@cli.command()
@click.argument("artifact_dir", type=click.Path())
def report(artifact_dir):
    """Regenerate evaluation outputs from a finished artifact."""
    result = report_artifact(artifact_dir)
    click.echo(result.table_text, nl=False)


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Abort:
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except Exception as exc:  # noqa: BLE001 - boundary between exit codes 1 and 2
        click.echo(f"internal error: {exc}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
