"""Command-line front door: validate, run, batch, report, serve.

Diagnostics and progress go to stderr; simulation data only ever lands in
files, so stdout stays clean for shell pipelines. Exit codes: 0 success,
1 invalid scenario or arguments, 2 execution failure.
"""

from __future__ import annotations

import os
import sys
from pathlib import Path

import click

from ocsim.config import ScenarioValidationError, load_scenario, scenario_hash
from ocsim.engine import run_batch, run_scenario
from ocsim.exports import read_frames_csv, write_batch_dir, write_run_dir

OUT_ROOT_ENV = "OCSIM_OUT"


def _fail(message: str, code: int = 1):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load(scenario_path: str):
    try:
        return load_scenario(scenario_path)
    except ScenarioValidationError as exc:
        for path, message in exc.errors:
            click.echo(f"invalid: {path}: {message}", err=True)
        sys.exit(1)


def _resolve_out(out: str | None, config, seed, prefix: str) -> Path:
    if out:
        return Path(out)
    root = os.environ.get(OUT_ROOT_ENV)
    if not root:
        _fail(f"--out not given and {OUT_ROOT_ENV} is not set")
    return Path(root) / f"{prefix}_{scenario_hash(config)[:12]}_{seed}"


@click.group()
def main():
    """Organized-crime recruitment simulator."""


@main.command()
@click.option("--scenario", required=True, type=click.Path(), help="Scenario JSON file.")
def validate(scenario):
    """Validate a scenario file; exit 0 iff it is well-formed."""
    _load(scenario)
    click.echo("valid", err=True)


@main.command()
@click.option("--scenario", required=True, type=click.Path())
@click.option("--out", type=click.Path(), help=f"Output directory (default under ${OUT_ROOT_ENV}).")
@click.option("--seed", type=int, default=None, help="Override the scenario seed.")
@click.option("--quiet", is_flag=True, help="Suppress the end-of-run summary.")
def run(scenario, out, seed, quiet):
    """Execute one scenario and write the full result artifacts."""
    config = _load(scenario)
    effective_seed = config.seed if seed is None else seed
    out_dir = _resolve_out(out, config, effective_seed, "run")
    try:
        result = run_scenario(config, seed=seed)
        write_run_dir(result, out_dir)
    except Exception as exc:  # noqa: BLE001 - boundary reporting
        _fail(f"run failed: {exc}", code=2)
    if not quiet:
        final = result.frames[-1]
        total_recruits = sum(f.recruits for f in result.frames)
        mean_rate = sum(f.crime_rate_100k for f in result.frames) / len(result.frames)
        click.echo(
            f"finished: ticks={len(result.frames)} final_oc_members={final.oc_members} "
            f"total_recruits={total_recruits} mean_crime_rate_100k={mean_rate:.1f} -> {out_dir}",
            err=True,
        )


@main.command()
@click.option("--scenario", required=True, type=click.Path())
@click.option("--out", type=click.Path())
@click.option("--replications", type=int, default=4, show_default=True)
@click.option("--jobs", type=int, default=None, help="Worker processes (default: all cores).")
@click.option("--seed", type=int, default=None, help="Override the base seed.")
@click.option("--quiet", is_flag=True)
def batch(scenario, out, replications, jobs, seed, quiet):
    """Run replications with seeds base, base+1, ... and a summary table."""
    if replications < 1:
        _fail("--replications must be >= 1")
    config = _load(scenario)
    base_seed = config.seed if seed is None else seed
    out_dir = _resolve_out(out, config, base_seed, "batch")
    jobs = jobs or os.cpu_count() or 1
    try:
        result = run_batch(config, replications=replications, jobs=jobs, base_seed=seed)
        write_batch_dir(result, out_dir)
    except Exception as exc:  # noqa: BLE001
        _fail(f"batch failed: {exc}", code=2)
    if not quiet:
        click.echo(
            f"finished: {replications} replicas, seeds {base_seed}..{base_seed + replications - 1} -> {out_dir}",
            err=True,
        )


def _frames_table(path: Path) -> list[dict[str, float]]:
    path = Path(path)
    if (path / "frames.csv").exists():
        return read_frames_csv(path / "frames.csv")
    if (path / "summary.csv").exists():
        rows = read_frames_csv(path / "summary.csv")
        return [
            {k.removesuffix("_mean"): v for k, v in row.items() if k == "tick" or k.endswith("_mean")}
            for row in rows
        ]
    raise FileNotFoundError(f"no frames.csv or summary.csv under {path}")


@main.command()
@click.option("--treatment", required=True, type=click.Path(exists=True), help="Run or batch output directory.")
@click.option("--baseline", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path(), help="Difference CSV to write.")
def report(treatment, baseline, out):
    """Per-tick difference table (treatment minus baseline) of every metric."""
    import csv

    try:
        rows_t = _frames_table(Path(treatment))
        rows_b = _frames_table(Path(baseline))
    except FileNotFoundError as exc:
        _fail(str(exc))
    n = min(len(rows_t), len(rows_b))
    if n == 0:
        _fail("no overlapping ticks between the two outputs")
    columns = [c for c in rows_t[0] if c in rows_b[0]]
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for i in range(n):
            row = []
            for c in columns:
                if c == "tick":
                    row.append(int(rows_t[i][c]))
                else:
                    row.append(repr(rows_t[i][c] - rows_b[i][c]))
            writer.writerow(row)
    click.echo(f"wrote {n} difference rows -> {out}", err=True)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option(
    "--results-root",
    type=click.Path(),
    default=None,
    help=f"Persistence directory (default ${OUT_ROOT_ENV}/service or ./ocsim-results).",
)
@click.option("--max-active-runs", default=4, show_default=True, type=int)
def serve(host, port, results_root, max_active_runs):
    """Start the HTTP control service for the dashboard."""
    import uvicorn

    from ocsim.service import create_app

    if results_root is None:
        root_env = os.environ.get(OUT_ROOT_ENV)
        results_root = Path(root_env) / "service" if root_env else Path("ocsim-results")
    app = create_app(Path(results_root), max_active_runs=max_active_runs)
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
