#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Command line: simulate, spectrum, benchmark, tangent, figure1, defaults.

Exit codes: 0 ok, 1 tolerance or test failure, 2 config or input error,
3 insufficient data, 4 inconclusive.
"""

# Built-in modules
from functools import wraps
from math import isfinite
from os.path import join
from typing import Any, Callable, Optional, Sequence, Tuple

# pip modules
import click

# local modules
from rifscascade.rc_benchmarks import domain_endpoints, run_benchmark
from rifscascade.rc_core import (
    FLAT_DEFAULTS,
    FLAT_DESCRIPTIONS,
    Canonical,
    CascadeConfig,
    Constant,
    figure1_config,
    grow,
)
from rifscascade.rc_errors import (
    CascadeError,
    ConfigError,
    ExtinctDepthError,
    InputFormatError,
    InsufficientDataError,
)
from rifscascade.rc_io import (
    RunManifest,
    format_benchmark_csv,
    format_heatmap_csv,
    read_realization,
    render_heatmap_svg,
    render_spectrum_svg,
    rows_to_scale_matrix,
    write_json,
    write_realization,
)
from rifscascade.rc_logging import highlight, logger, setup_logging
from rifscascade.rc_measure import Source, mass_heatmap_bins, scale_matrix
from rifscascade.rc_spectrum import MeshMode, QGrid, estimate_spectrum
from rifscascade.rc_tangent import tangent_equivalence_test
from rifscascade.rc_utils import VERSION, dump_json, is_compatible_version, load_config, write_text

# pylint: disable=too-many-arguments
# pylint: disable=too-many-locals

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_INSUFFICIENT = 3
EXIT_INCONCLUSIVE = 4

MESH_CHOICES = click.Choice([mode.value for mode in MeshMode])
SOURCE_CHOICES = click.Choice([source.value for source in Source])


def exit_codes(func: Callable[..., Optional[int]]) -> Callable[..., None]:
    """Maps toolkit exceptions onto the exit-code contract"""

    @wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> None:
        try:
            code = func(*args, **kwargs) or EXIT_OK
        except (ConfigError, InputFormatError) as exc:
            click.echo(f"error: {exc}", err=True)
            code = EXIT_CONFIG
        except (InsufficientDataError, ExtinctDepthError) as exc:
            click.echo(f"insufficient data: {exc}", err=True)
            code = EXIT_INSUFFICIENT
        except CascadeError as exc:
            click.echo(f"failed: {exc}", err=True)
            code = EXIT_FAILURE
        click.get_current_context().exit(code)

    return wrapper


def _load_cascade_config(
    path: Optional[str], depth: Optional[int] = None, seed: Optional[int] = None
) -> CascadeConfig:
    flat = load_config(path)
    if depth is not None:
        flat["max_depth"] = depth
    if seed is not None:
        flat["master_seed"] = seed
    return CascadeConfig.from_flat(flat)


def _qgrid(q_min: float, q_max: float, q_step: float, values: Sequence[float]) -> QGrid:
    if values:
        return QGrid.from_values(values)
    return QGrid.arithmetic(q_min, q_max, q_step)


def _window(depth_lo: Optional[int], depth_hi: Optional[int]) -> Optional[Tuple[Optional[int], Optional[int]]]:
    if depth_lo is None and depth_hi is None:
        return None
    return depth_lo, depth_hi


def q_options(q_min: float, q_max: float, q_step: float) -> Callable[[Callable], Callable]:
    """Shared --q-min/--q-max/--q-step/--q flags"""

    def decorate(func: Callable) -> Callable:
        for option in reversed(
            [
                click.option("--q-min", type=float, default=q_min, show_default=True),
                click.option("--q-max", type=float, default=q_max, show_default=True),
                click.option("--q-step", type=float, default=q_step, show_default=True),
                click.option(
                    "--q", "q_values", type=float, multiple=True, help="Explicit q value, repeatable."
                ),
            ]
        ):
            func = option(func)
        return func

    return decorate


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option(
    "--threads", type=int, default=1, show_default=True, help="Worker threads, 0 for one per CPU."
)
@click.option("-v", "--verbose", is_flag=True, help="Debug logging.")
@click.version_option(VERSION, prog_name="rifs-cascade")
@click.pass_context
def cli(ctx: click.Context, threads: int, verbose: bool) -> None:
    """Branching-process random IFS cascades and their multifractal spectra."""
    setup_logging(verbose)
    ctx.obj = {"threads": threads}


@cli.command()
@click.option("-c", "--config", "config_path", type=click.Path(), help="Flat JSON config file.")
@click.option("--depth", type=int, help="Override max_depth.")
@click.option("--seed", type=int, help="Override master_seed.")
@click.option("--no-masses", is_flag=True, help="Leave the mass column empty.")
@click.option("-o", "--output", required=True, type=click.Path(dir_okay=False), help="Realization CSV.")
@click.pass_context
@exit_codes
def simulate(
    ctx: click.Context,
    config_path: Optional[str],
    depth: Optional[int],
    seed: Optional[int],
    no_masses: bool,
    output: str,
) -> int:
    """Grow one realization and write its leaves per depth."""
    config = _load_cascade_config(config_path, depth, seed)
    manifest = RunManifest.start("simulate", config.to_flat(), config.master_seed)
    realization = grow(config, ctx.obj["threads"])
    paths = write_realization(output, realization, with_masses=not no_masses)
    manifest.finish(paths).write(output)
    logger.info(
        "Wrote %s leaves at depth %s to %s",
        realization.leaf_count(realization.depth),
        realization.depth,
        highlight(output),
    )
    return EXIT_OK


@cli.command()
@click.argument("input_csv", type=click.Path(dir_okay=False))
@q_options(-2.0, 4.0, 0.1)
@click.option("--mesh", type=MESH_CHOICES, default=MeshMode.GEO_MEAN.value, show_default=True)
@click.option("--source", type=SOURCE_CHOICES, default=Source.MASS.value, show_default=True)
@click.option("--depth-lo", type=int, help="First depth of the regression window.")
@click.option("--depth-hi", type=int, help="Last depth of the regression window.")
@click.option("--no-smooth", is_flag=True, help="Never replace tau by its concave majorant.")
@click.option("-o", "--output", required=True, type=click.Path(dir_okay=False), help="Spectrum JSON.")
@click.option("--svg", type=click.Path(dir_okay=False), help="Also plot (alpha, f).")
@exit_codes
def spectrum(
    input_csv: str,
    q_min: float,
    q_max: float,
    q_step: float,
    q_values: Tuple[float, ...],
    mesh: str,
    source: str,
    depth_lo: Optional[int],
    depth_hi: Optional[int],
    no_smooth: bool,
    output: str,
    svg: Optional[str],
) -> int:
    """Estimate tau(q), alpha(q) and f(alpha) from a realization CSV."""
    rows, meta = read_realization(input_csv)
    if meta is not None and not is_compatible_version(meta.get("version"), VERSION):
        logger.warning("%s was written by version %s", input_csv, meta.get("version"))
    qgrid = _qgrid(q_min, q_max, q_step, q_values)
    manifest = RunManifest.start(
        "spectrum",
        None if meta is None else meta.get("config"),
        None if meta is None else meta.get("master_seed"),
        input=input_csv,
        q=list(qgrid.values),
        mesh=mesh,
        source=source,
        depth_window=[depth_lo, depth_hi],
    )
    estimate = estimate_spectrum(
        rows_to_scale_matrix(rows),
        qgrid,
        MeshMode(mesh),
        Source(source),
        _window(depth_lo, depth_hi),
        smooth=not no_smooth,
    )
    paths = [write_json(output, estimate.to_dict())]
    if svg:
        write_text(svg, render_spectrum_svg(estimate.alpha, estimate.f))
        paths.append(svg)
    manifest.finish(paths).write(output)
    logger.info("Spectrum over depths %s..%s written to %s", *estimate.depth_window, highlight(output))
    return EXIT_OK


@cli.command()
@click.option("--depth", type=int, default=14, show_default=True)
@click.option("--seeds", type=int, default=20, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True, help="Master seed of the ensemble.")
@q_options(-1.0, 3.0, 0.5)
@click.option("--mc-samples", type=int, default=10_000, show_default=True)
@click.option("--tolerance", type=float, default=0.05, show_default=True)
@click.option("-o", "--output", required=True, type=click.Path(dir_okay=False), help="Report CSV.")
@click.pass_context
@exit_codes
def benchmark(
    ctx: click.Context,
    depth: int,
    seeds: int,
    seed: int,
    q_min: float,
    q_max: float,
    q_step: float,
    q_values: Tuple[float, ...],
    mc_samples: int,
    tolerance: float,
    output: str,
) -> int:
    """Compare simulated kappa with the worked example's closed form."""
    qgrid = _qgrid(q_min, q_max, q_step, q_values)
    manifest = RunManifest.start(
        "benchmark", None, seed, depth=depth, seeds=seeds, q=list(qgrid.values), tolerance=tolerance
    )
    report = run_benchmark(depth, seeds, qgrid, seed, ctx.obj["threads"], mc_samples, tolerance)
    write_text(output, format_benchmark_csv(report.rows()))
    manifest.finish([output]).write(output)
    if not report.passed:
        click.echo(
            f"tolerance {tolerance} exceeded: max |kappa_hat - kappa| = {report.abs_error.max():.4f}",
            err=True,
        )
        return EXIT_FAILURE
    logger.info("Benchmark within tolerance, report in %s", highlight(output))
    return EXIT_OK


@cli.command()
@click.option("-c", "--config", "config_path", type=click.Path(), help="Flat JSON config file.")
@click.option("--n", "n", type=int, default=6, show_default=True, help="Depth of the source leaf.")
@click.option("--k", "k", type=int, default=6, show_default=True, help="Depth below the leaf.")
@click.option("--seeds", type=int, default=100, show_default=True, help="Realizations per side.")
@click.option("--seed", type=int, help="Override master_seed.")
@click.option(
    "--baseline-constant",
    type=float,
    help="Compare against a constant-ratio cascade instead of the configured law.",
)
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.option("-o", "--output", required=True, type=click.Path(dir_okay=False), help="Report JSON.")
@click.pass_context
@exit_codes
def tangent(
    ctx: click.Context,
    config_path: Optional[str],
    n: int,
    k: int,
    seeds: int,
    seed: Optional[int],
    baseline_constant: Optional[float],
    alpha: float,
    output: str,
) -> int:
    """Test tangent measures of the anchored variant against non-anchored cascades."""
    config = _load_cascade_config(config_path, seed=seed)
    baseline = None if baseline_constant is None else Constant(baseline_constant)
    manifest = RunManifest.start(
        "tangent",
        config.to_flat(),
        config.master_seed,
        n=n,
        k=k,
        seeds=seeds,
        baseline_constant=baseline_constant,
        alpha=alpha,
    )
    report = tangent_equivalence_test(
        config, n, k, seeds, baseline_contraction=baseline, alpha=alpha, threads=ctx.obj["threads"]
    )
    write_json(output, report.to_dict())
    manifest.finish([output]).write(output)
    click.echo(report.verdict)
    if report.verdict == "inconclusive":
        return EXIT_INCONCLUSIVE
    return EXIT_FAILURE if report.verdict == "rejected" else EXIT_OK


@cli.command()
@click.option("-c", "--config", "config_path", type=click.Path(), help="Flat JSON config file.")
@click.option("--depth", type=int, default=20, show_default=True)
@click.option("--bins", type=int, default=64, show_default=True)
@click.option("--seed", type=int, help="Override master_seed.")
@click.option("--source", type=SOURCE_CHOICES, default=Source.DIAMETER.value, show_default=True)
@click.option("--mesh", type=MESH_CHOICES, default=MeshMode.GEO_MEAN.value, show_default=True)
@q_options(-2.0, 4.0, 0.1)
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.pass_context
@exit_codes
def figure1(
    ctx: click.Context,
    config_path: Optional[str],
    depth: int,
    bins: int,
    seed: Optional[int],
    source: str,
    mesh: str,
    q_min: float,
    q_max: float,
    q_step: float,
    q_values: Tuple[float, ...],
    out_dir: str,
) -> int:
    """Mass heatmap over position and depth, plus the spectrum of the same realization."""
    if config_path:
        config = _load_cascade_config(config_path, depth, seed)
    else:
        config = figure1_config(max_depth=depth)
        if seed is not None:
            config = config.with_changes(master_seed=seed)

    qgrid = _qgrid(q_min, q_max, q_step, q_values)
    beta = config.weighting.beta if isinstance(config.weighting, Canonical) else 1.0
    endpoints = domain_endpoints(config.contraction, beta)
    if isfinite(endpoints.q_minus) and qgrid.q_min < endpoints.q_minus + 0.5:
        qgrid = qgrid.clipped(endpoints.q_minus + 0.5)
        logger.info("q grid starts at %s, inside the domain (q_- = %s)", qgrid.q_min, endpoints.q_minus)

    manifest = RunManifest.start(
        "figure1",
        config.to_flat(),
        config.master_seed,
        bins=bins,
        source=source,
        mesh=mesh,
        q=list(qgrid.values),
    )
    realization = grow(config, ctx.obj["threads"])
    matrix = scale_matrix(realization)
    heatmap = mass_heatmap_bins(matrix, bins)

    paths = write_realization(join(out_dir, "realization.csv"), realization)
    paths.append(join(out_dir, "heatmap.csv"))
    write_text(paths[-1], format_heatmap_csv(heatmap))
    paths.append(join(out_dir, "heatmap.svg"))
    write_text(paths[-1], render_heatmap_svg(heatmap))

    estimate = estimate_spectrum(matrix, qgrid, MeshMode(mesh), Source(source))
    result = estimate.to_dict()
    result["leaf_count"] = realization.leaf_count(realization.depth)
    result["domain"] = endpoints.to_dict()
    paths.append(write_json(join(out_dir, "spectrum.json"), result))
    paths.append(join(out_dir, "spectrum.svg"))
    write_text(paths[-1], render_spectrum_svg(estimate.alpha, estimate.f))
    manifest.finish(paths).write(join(out_dir, "figure1"))
    logger.info(
        "Figure data for %s leaves at depth %s written to %s",
        result["leaf_count"],
        realization.depth,
        highlight(out_dir),
    )
    return EXIT_OK


@cli.command()
@click.option("--describe", is_flag=True, help="One line per key with its description.")
def defaults(describe: bool) -> None:
    """Print every configuration key with its default."""
    if not describe:
        click.echo(dump_json(FLAT_DEFAULTS), nl=False)
        return
    width = max(len(key) for key in FLAT_DEFAULTS)
    for key, value in FLAT_DEFAULTS.items():
        click.echo(f"{key:<{width}}  {dump_json(value, compact=True):<16}  {FLAT_DESCRIPTIONS[key]}")


def main() -> None:
    cli(prog_name="rifs-cascade")  # pylint: disable=no-value-for-parameter


if __name__ == "__main__":
    main()
