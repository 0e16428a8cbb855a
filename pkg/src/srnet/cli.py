"""Command-line interface.

Subcommands: kernel-table, transform-grid, sample, run, compare, timing.
Reports that take --out also render a figure next to the delimited output.
Every failure is a one-line `error: <Kind>: <message>` on stderr with a
nonzero exit code.
"""

from __future__ import annotations

import functools
import sys
from pathlib import Path

import click
import numpy as np

from .data import build_digits_dataset, gen_boolean, gen_sine, gen_tsc, make_codebook
from .errors import ConfigError, SrnetError
from .experiments import (
    EXPERIMENTS,
    METHODS,
    SAMPLERS,
    ExperimentConfig,
    compare_runs,
    parse_beta_shapes,
    read_config_file,
    read_summary,
    run_experiment,
    timing_report,
)
from .fitting import draw_hidden
from .kernels import build_kernel
from .plots import save_heatmap_figure, save_line_figure
from .transform import make_transform


def _fail_cleanly(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (SrnetError, ValueError, OSError) as exc:
            click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
            sys.exit(2)

    return wrapper


def _emit(text: str, out: str | None):
    if out is None:
        click.echo(text, nl=False)
    else:
        Path(out).write_text(text)


def _figure_path(out: str) -> Path:
    return Path(out).with_suffix(".png")


@click.group()
@click.version_option(package_name="srnet")
def main():
    """Sampling-based initialization for single-hidden-layer networks."""


@main.command("kernel-table")
@click.option("--order", type=int, required=True, help="Derivative order k.")
@click.option("--from", "z_from", type=float, default=-1.0, show_default=True)
@click.option("--to", "z_to", type=float, default=1.0, show_default=True)
@click.option("--steps", type=int, default=201, show_default=True)
@click.option("--max-order", type=int, default=12, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="CSV file; also renders a .png next to it.")
@_fail_cleanly
def kernel_table(order, z_from, z_to, steps, max_order, out):
    """Tabulate the order-k bump kernel as CSV columns (z, value)."""
    if steps < 2 or z_to <= z_from:
        raise ConfigError("need steps >= 2 and --to greater than --from")
    kernel = build_kernel(order, max_order=max_order)
    z = np.linspace(z_from, z_to, steps)
    v = kernel.eval(z)
    lines = ["z,value"] + [f"{zi:.12g},{vi:.12g}" for zi, vi in zip(z, v)]
    _emit("\n".join(lines) + "\n", out)
    if out is not None:
        save_line_figure(_figure_path(out), [(f"order {order}", z, v)],
                         xlabel="z", ylabel="value")


def _grid_dataset(function, points):
    if function == "tsc":
        return gen_tsc(points)
    if function == "sine":
        return gen_sine(points)
    raise ConfigError(f"unknown function {function!r}")


@main.command("transform-grid")
@click.option("--function", type=click.Choice(["tsc", "sine"]), default="tsc",
              show_default=True, help="1-D dataset whose transform to tabulate.")
@click.option("--points", type=int, default=201, show_default=True)
@click.option("--order", type=int, default=None, help="Kernel order (default: rule on m).")
@click.option("--a-from", type=float, default=-40.0, show_default=True)
@click.option("--a-to", type=float, default=40.0, show_default=True)
@click.option("--a-steps", type=int, default=161, show_default=True)
@click.option("--b-from", type=float, default=-41.0, show_default=True)
@click.option("--b-to", type=float, default=41.0, show_default=True)
@click.option("--b-steps", type=int, default=161, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="CSV file; also renders a heatmap .png next to it.")
@_fail_cleanly
def transform_grid(function, points, order, a_from, a_to, a_steps, b_from, b_to,
                   b_steps, out):
    """Tabulate T(a, b) on a grid as CSV columns (a, b, T)."""
    dataset = _grid_dataset(function, points)
    if dataset.m != 1:
        raise ConfigError("transform-grid needs a 1-dimensional input dataset")
    t = make_transform(dataset, order=order)
    a = np.linspace(a_from, a_to, a_steps)
    b = np.linspace(b_from, b_to, b_steps)
    aa, bb = np.meshgrid(a, b, indexing="ij")
    vals = t.eval_batch(aa.ravel().reshape(-1, 1), bb.ravel()).reshape(a_steps, b_steps)
    lines = ["a,b,T"]
    for i in range(a_steps):
        for j in range(b_steps):
            lines.append(f"{a[i]:.12g},{b[j]:.12g},{vals[i, j]:.12g}")
    _emit("\n".join(lines) + "\n", out)
    if out is not None:
        save_heatmap_figure(_figure_path(out), a, b, vals, M=t.input_radius,
                            title=f"{function}: transform magnitude")


@main.command("sample")
@click.option("--experiment", type=click.Choice(list(EXPERIMENTS)), default="tsc",
              show_default=True)
@click.option("--method", type=click.Choice(list(SAMPLERS)), default="ar", show_default=True)
@click.option("--units", "-J", type=int, default=100, show_default=True,
              help="Number of hidden pairs to draw.")
@click.option("--seed", type=int, required=True)
@click.option("--beta-shapes", default="100,3", show_default=True,
              help="Annealing Beta shapes, comma separated.")
@click.option("--envelope-safety", type=float, default=1.2, show_default=True)
@click.option("--a-max", type=float, default=None, help="Proposal half-width per coordinate.")
@click.option("--tsc-points", type=int, default=201, show_default=True)
@click.option("--train-n", type=int, default=2000, show_default=True)
@click.option("--codebook", type=click.Choice(["one_hot", "random_binary"]),
              default="one_hot", show_default=True)
@click.option("--images", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--labels", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Output file (default stdout), one tab-separated sample per line.")
@_fail_cleanly
def sample(experiment, method, units, seed, beta_shapes, envelope_safety, a_max,
           tsc_points, train_n, codebook, images, labels, out):
    """Draw hidden parameters; one line per sample: a_1 ... a_m, b."""
    if experiment == "tsc":
        dataset = gen_tsc(tsc_points)
        a_max = 40.0 if a_max is None else a_max
    elif experiment == "boolean":
        dataset = gen_boolean()
        a_max = 10.0 if a_max is None else a_max
    else:
        if images is None or labels is None:
            raise ConfigError("digits sampling needs --images and --labels")
        book = make_codebook(codebook, 10, d_out=10, seed=seed)
        dataset = build_digits_dataset(images, labels, book, n_examples=train_n, seed=seed)
        a_max = 40.0 if a_max is None else a_max
    batch, _ = draw_hidden(dataset, units, method, seed=seed, a_max=a_max,
                           envelope_safety=envelope_safety,
                           beta_shapes=parse_beta_shapes(beta_shapes))
    lines = [
        "\t".join(format(v, ".17g") for v in a_row) + "\t" + format(b, ".17g")
        for a_row, b in zip(batch.a, batch.b)
    ]
    _emit("\n".join(lines) + "\n", out)


def _apply_config_file(ctx, explicit: dict) -> dict:
    """Merge: explicit command-line flags beat the config file, which beats
    the defaults already present in `explicit`."""
    path = explicit.pop("config")
    if path is None:
        return explicit
    from_file = read_config_file(path)
    merged = dict(explicit)
    for key, value in from_file.items():
        source = ctx.get_parameter_source(key)
        if source is None or source.name != "COMMANDLINE":
            merged[key] = value
    return merged


@main.command("run")
@click.option("--experiment", type=click.Choice(list(EXPERIMENTS)), default=None)
@click.option("--method", type=click.Choice(list(METHODS)), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
              help="Bundle directory for trace.csv, model.txt, summary.txt, figures.")
@click.option("--config", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Flat key = value file; command-line flags win.")
@click.option("--units", "-J", "pairs", type=int, default=None, help="Hidden pairs J.")
@click.option("--sampler", type=click.Choice(list(SAMPLERS)), default=None)
@click.option("--iters", type=int, default=None, help="Training budget (sr default: 0).")
@click.option("--h", type=float, default=1.0, show_default=True)
@click.option("--a-max", type=float, default=None)
@click.option("--envelope-safety", type=float, default=1.2, show_default=True)
@click.option("--beta-shapes", default="100,3", show_default=True)
@click.option("--learning-rate", type=float, default=0.05, show_default=True)
@click.option("--batch-size", type=int, default=32, show_default=True)
@click.option("--trace-every", type=int, default=None)
@click.option("--tsc-points", type=int, default=201, show_default=True)
@click.option("--train-n", type=int, default=2000, show_default=True)
@click.option("--test-n", type=int, default=1000, show_default=True)
@click.option("--codebook", type=click.Choice(["one_hot", "random_binary"]),
              default="one_hot", show_default=True)
@click.option("--images", type=click.Path(dir_okay=False), default=None)
@click.option("--labels", type=click.Path(dir_okay=False), default=None)
@click.option("--test-images", type=click.Path(dir_okay=False), default=None)
@click.option("--test-labels", type=click.Path(dir_okay=False), default=None)
@click.pass_context
@_fail_cleanly
def run(ctx, **kwargs):
    """Run one (experiment, method, seed) cell into a result bundle."""
    merged = _apply_config_file(ctx, kwargs)
    for required in ("experiment", "method", "seed", "out_dir"):
        if merged.get(required) is None:
            flag = "--out" if required == "out_dir" else "--" + required
            raise ConfigError(f"{flag} is required (flag or config file)")
    merged["beta_shapes"] = parse_beta_shapes(merged["beta_shapes"])
    cfg = ExperimentConfig(**merged)
    bundle = run_experiment(cfg)
    summary = (bundle / "summary.txt").read_text().strip()
    click.echo(summary)


@main.command("compare")
@click.argument("bundles", nargs=-1, type=click.Path(exists=True, file_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="CSV file; also renders an overlay .png next to it.")
@_fail_cleanly
def compare(bundles, out):
    """Align run bundles into long-format CSV (method, iter, metric, value)."""
    text = compare_runs(list(bundles), out_path=out)
    if out is None:
        click.echo(text, nl=False)
    else:
        _render_compare_figure(bundles, out)


def _render_compare_figure(bundles, out):
    from .network import read_trace

    series = []
    for d in bundles:
        method = read_summary(d)["method"]
        trace = read_trace(Path(d) / "trace.csv")
        iters = [r.iteration for r in trace.records]
        series.append((method, iters, [r.loss for r in trace.records]))
    save_line_figure(_figure_path(out), series, xlabel="iteration", ylabel="loss")


@main.command("timing")
@click.argument("bundles", nargs=-1, type=click.Path(exists=True, file_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@_fail_cleanly
def timing(bundles, out):
    """Per-stage wall-clock seconds for each run bundle."""
    if not bundles:
        raise ConfigError("need at least one run bundle")
    text = timing_report(list(bundles), out_path=out)
    if out is None:
        click.echo(text, nl=False)


if __name__ == "__main__":
    main()
