"""Command-line front end.

Subcommands: preview-schedule (per-cycle max_lr / per-iteration LR as CSV,
no training), run (iterative pruning across seeds), oracle (per-cycle grid
search), hist (re-render stored histogram CSVs as SVG), synth-data
(deterministic Gaussian-blob dataset in IDX format).

Exit codes: 0 success, 2 config/usage error, 3 numeric fault, 4 data-format
error.
"""

from __future__ import annotations

import functools
import sys
from dataclasses import replace
from pathlib import Path

import click

from . import __version__
from .charts import render_histogram_svgs
from .config import canonical_items, parse_config_text
from .datasets import synth_blobs, write_idx
from .errors import ConfigError, DataFormatError, NumericFaultError
from .harness import (
    load_dataset,
    oracle_grid_search,
    run_experiment,
    split_dataset,
)
from .reports import (
    RunManifest,
    config_hash,
    hist_rows,
    read_histograms,
    record_rows,
    write_histograms,
    write_oracle,
    write_records,
)
from .reports import write_oracle_grid
from .schedules import lr_at, on_cycle_start, parse_schedule, peak_lr


def _guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(2)
        except NumericFaultError as exc:
            click.echo(f"numeric fault: {exc}", err=True)
            sys.exit(3)
        except DataFormatError as exc:
            click.echo(f"data format error: {exc}", err=True)
            sys.exit(4)
    return wrapper


@click.group()
@click.version_option(__version__)
def main():
    """Iterative pruning of dense ReLU networks with adaptive LR schedules."""


def _load_config(config_path: str):
    try:
        text = Path(config_path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config_text(text)


@main.command("preview-schedule")
@click.option("--schedule", "schedule_text", default=None,
              help="schedule in positional form, e.g. 'scyc(4e-2, 6e-2, 1, 4, 10K, 32K, 48K, nil)'")
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="read the schedule (and prune rate) from a config file")
@click.option("--cycles", type=int, default=13, show_default=True,
              help="last pruning cycle to tabulate")
@click.option("--prune-rate", type=float, default=0.2, show_default=True)
@click.option("--iters", type=int, default=None,
              help="also sample the per-iteration LR over this many iterations")
@click.option("--stride", type=int, default=1000, show_default=True,
              help="iteration stride for --iters sampling")
@_guarded
def preview_schedule(schedule_text, config_path, cycles, prune_rate, iters, stride):
    """Print per-cycle max_lr (and optionally per-iteration LR) as CSV."""
    if (schedule_text is None) == (config_path is None):
        raise click.UsageError("provide exactly one of --schedule / --config")
    if config_path is not None:
        cfg, _ = _load_config(config_path)
        spec = cfg.schedule
    else:
        try:
            spec = parse_schedule(schedule_text, prune_rate=prune_rate)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    if iters is None:
        click.echo("m,max_lr")
        for m in range(cycles + 1):
            click.echo(f"{m},{peak_lr(spec, m)!r}")
    else:
        click.echo("m,iter,lr")
        for m in range(cycles + 1):
            clock = on_cycle_start(spec, m)
            for it in range(0, iters + 1, stride):
                lr = lr_at(spec, replace(clock, iteration=it))
                click.echo(f"{m},{it},{lr!r}")


@main.command("run")
@click.option("--config", "config_path", type=click.Path(), required=True)
@click.option("--out-dir", type=click.Path(), required=True)
@click.option("--seed", "seeds", type=int, multiple=True,
              help="override the config seed list (repeatable)")
@click.option("--threads", type=int, default=1, show_default=True,
              help="run this many seeds concurrently")
@_guarded
def run(config_path, out_dir, seeds, threads):
    """Run iterative pruning across seeds; write records, histograms, SVGs."""
    cfg, resolved = _load_config(config_path)
    if seeds:
        cfg = replace(cfg, seeds=tuple(seeds))
        resolved["seeds"] = ", ".join(str(s) for s in seeds)

    results = run_experiment(cfg, threads=threads)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records_csv = out / "records.csv"
    histograms_csv = out / "histograms.csv"
    svg_dir = out / "svg"
    write_records(records_csv, record_rows(results))
    write_histograms(histograms_csv, hist_rows(results))
    # render from the CSV we just wrote, so `hist` reproduces byte-identical files
    render_histogram_svgs(read_histograms(histograms_csv), svg_dir)
    RunManifest(
        config_hash=config_hash(canonical_items(resolved)),
        seeds=cfg.seeds,
        records_csv=str(records_csv),
        histograms_csv=str(histograms_csv),
        svg_dir=str(svg_dir),
        tool_version=__version__,
    ).write(out / "manifest.json")

    for seed, records in results.items():
        last = records[-1]
        click.echo(
            f"seed {seed}: {len(records)} cycles, final lambda {last.lam:.2f}%, "
            f"early-stop test acc {last.early_stop_test_acc:.4f}"
        )
    click.echo(f"artifacts in {out}")


@main.command("oracle")
@click.option("--config", "config_path", type=click.Path(), required=True)
@click.option("--out-dir", type=click.Path(), required=True)
@click.option("--seed", type=int, default=None,
              help="run seed (default: first seed in the config)")
@click.option("--grid", "grid_text", default=None,
              help="comma-separated max_lr grid (default: 10 points/decade over [1e-4, 1e-1])")
@_guarded
def oracle(config_path, out_dir, seed, grid_text):
    """Per-cycle greedy grid search over the warmup amplitude."""
    cfg, _ = _load_config(config_path)
    run_seed = cfg.seeds[0] if seed is None else seed
    grid = None
    if grid_text:
        try:
            grid = tuple(float(tok) for tok in grid_text.split(","))
        except ValueError:
            raise ConfigError(f"malformed --grid: {grid_text!r}") from None

    x, y, n_classes = load_dataset(cfg.dataset)
    data = split_dataset(x, y, run_seed, n_classes)
    results = oracle_grid_search(cfg, data, run_seed, grid=grid)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_oracle(out / "oracle.csv", {run_seed: results})
    write_oracle_grid(out / "oracle_grid.csv", {run_seed: results})
    click.echo("m,lambda,well_tuned,region_lo,region_hi,scyc_estimate")
    for r in results:
        click.echo(
            f"{r.m},{r.lam:.2f},{r.well_tuned_max_lr:.4g},"
            f"{r.region_lo:.4g},{r.region_hi:.4g},{r.scyc_estimate:.4g}"
        )
    click.echo(f"artifacts in {out}")


@main.command("hist")
@click.option("--histograms", "histograms_csv", type=click.Path(), required=True)
@click.option("--out-dir", type=click.Path(), required=True)
@_guarded
def hist(histograms_csv, out_dir):
    """Re-render stored histogram CSV rows as SVG bar charts."""
    try:
        rows = read_histograms(histograms_csv)
    except OSError as exc:
        raise DataFormatError(f"cannot read histogram CSV: {exc}") from None
    except ValueError as exc:
        raise DataFormatError(str(exc)) from None
    written = render_histogram_svgs(rows, out_dir)
    click.echo(f"wrote {len(written)} SVG files to {out_dir}")


@main.command("synth-data")
@click.option("--classes", type=int, default=10, show_default=True)
@click.option("--n", type=int, default=8000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--class-sep", type=float, default=5.0, show_default=True)
@click.option("--clusters", type=int, default=2, show_default=True)
@click.option("--out-dir", type=click.Path(), required=True)
@_guarded
def synth_data(classes, n, seed, class_sep, clusters, out_dir):
    """Emit a deterministic Gaussian-blob classification set as IDX files."""
    try:
        images, labels = synth_blobs(n=n, classes=classes, seed=seed,
                                     class_sep=class_sep,
                                     clusters_per_class=clusters)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    images_path = out / "images-idx3-ubyte"
    labels_path = out / "labels-idx1-ubyte"
    write_idx(images, labels, images_path, labels_path)
    click.echo(f"wrote {images_path} and {labels_path} ({n} examples, {classes} classes)")


if __name__ == "__main__":
    main()
