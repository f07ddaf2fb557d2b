"""CLI command definitions using Typer."""

import logging
import os
from pathlib import Path
from typing import Optional

import numpy as np
import typer
from dotenv import load_dotenv
from rich.console import Console
from rich.logging import RichHandler
from rich.progress import track
from rich.table import Table

from .core.evaluation import ari_details, label_clustering, profile_accuracy
from .core.experiment import (
    GridCell,
    draw_q_matrix,
    run_experiment,
    run_method,
    simulate_cell,
)
from .core.hierarchy import enumerate_profiles, load_hierarchy
from .models import ALL_METHODS, ExperimentConfig, profile_to_string
from .utils.figures import render_figures
from .utils.io import (
    load_config,
    read_capability_from_csv,
    read_q_matrix_from_csv,
    read_results_from_csv,
    read_truth_from_csv,
    write_assignments_to_csv,
    write_capability_to_csv,
    write_q_matrix_to_csv,
    write_responses_to_csv,
    write_results_to_csv,
    write_trace_to_csv,
    write_truth_to_csv,
)
from .utils.run_meta import RunRecorder
from .utils.seeding import derive_rng

# Load environment variables
load_dotenv()

app = typer.Typer(
    name="skillscape",
    help="Simulate students under skill hierarchies and compare clustering methods for recovering their skill profiles",
    no_args_is_help=True,
)
console = Console()


@app.callback()
def main(
    verbose: int = typer.Option(
        0, "-v", "--verbose", count=True, help="-v for progress logs, -vv for per-iteration logs"
    ),
):
    """Configure logging for every command."""
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbose, logging.DEBUG)
    logging.basicConfig(
        level=level,
        format="%(message)s",
        handlers=[RichHandler(console=console, show_path=False)],
        force=True,
    )


@app.command()
def run(
    config: str = typer.Option(..., "-c", "--config", help="Path to experiment config JSON"),
    out: str = typer.Option(..., "-o", "--out", help="Directory for results.csv, figures/ and run_meta.json"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Override the config's master seed"),
    workers: Optional[int] = typer.Option(
        None, "--workers", help="Worker processes (overrides SKILLSCAPE_WORKERS and config)"
    ),
):
    """Run the full simulation grid."""
    try:
        console.print(f"[blue]Reading config from {config}...[/blue]")
        cfg = load_config(config)
        if seed is not None:
            cfg = ExperimentConfig(**{**cfg.model_dump(), "seed": seed})

        recorder = RunRecorder(cfg)
        rows = run_experiment(
            cfg,
            recorder=recorder,
            workers=workers,
            progress=lambda cells, total: track(
                cells, total=total, description="Running grid...", console=console
            ),
        )

        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)

        results_path = out_dir / "results.csv"
        partial_path = out_dir / "results.csv.partial"
        console.print(f"[blue]Writing {len(rows)} rows to {results_path}...[/blue]")
        write_results_to_csv(rows, partial_path)
        os.replace(partial_path, results_path)

        if rows:
            figures = render_figures(rows, out_dir / "figures")
            console.print(f"[green]✓ Wrote {len(figures)} figures[/green]")
        else:
            console.print("[yellow]No rows produced; skipping figures[/yellow]")

        recorder.save(out_dir / "run_meta.json")
        recorder.print_summary(console)
        console.print(f"\n[green]✓ Results saved to {out_dir}[/green]")

    except Exception as e:
        console.print(f"[red]Error: {str(e)}[/red]")
        raise typer.Exit(1) from e


@app.command("enumerate")
def enumerate_profiles_command(
    hierarchy: str = typer.Option(..., "--hierarchy", help="Hierarchy name or JSON file"),
    k: int = typer.Option(6, "--k", help="Number of skills"),
):
    """Print the profiles a hierarchy admits, in canonical order."""
    try:
        resolved = load_hierarchy(hierarchy, k)
        profiles = enumerate_profiles(resolved)

        table = Table(title=f"{resolved.label} (K={resolved.num_skills})")
        table.add_column("#", justify="right")
        table.add_column("Profile")
        table.add_column("Mastered", justify="right")
        for index, profile in enumerate(profiles.profiles, start=1):
            table.add_row(str(index), profile_to_string(profile), str(sum(profile)))
        console.print(table)
        console.print(f"[green]{len(profiles)} profiles[/green]")

    except Exception as e:
        console.print(f"[red]Error: {str(e)}[/red]")
        raise typer.Exit(1) from e


@app.command()
def simulate(
    hierarchy: str = typer.Option(..., "--hierarchy", help="Hierarchy name or JSON file"),
    out: str = typer.Option(..., "-o", "--out", help="Directory for the dataset CSVs"),
    seed: int = typer.Option(..., "--seed", help="Master seed"),
    k: int = typer.Option(6, "--k", help="Number of skills"),
    students: int = typer.Option(250, "-n", "--students", help="Number of students"),
    model: str = typer.Option("DINA", "--model", help="Generating model (DINA or NIDA)"),
    subset_size: Optional[int] = typer.Option(
        None, "--subset-size", help="Profiles present (default: all licit profiles)"
    ),
    replication: int = typer.Option(0, "--replication", help="Replication index for seeding"),
    q_matrix: Optional[str] = typer.Option(
        None, "--q-matrix", help="Q-matrix CSV to use instead of drawing one"
    ),
    zero_noise: bool = typer.Option(False, "--zero-noise", help="Set every slip and guess to 0"),
):
    """Simulate one dataset and write it to CSV."""
    try:
        cfg = ExperimentConfig(K=k, N=students, seed=seed, zero_noise=zero_noise)
        resolved = load_hierarchy(hierarchy, k)
        profiles = enumerate_profiles(resolved)
        q = read_q_matrix_from_csv(q_matrix) if q_matrix else draw_q_matrix(cfg)
        if q.num_skills != k:
            raise ValueError(f"Q-matrix has {q.num_skills} skills, expected {k}")

        cell = GridCell(
            hierarchy=resolved,
            profiles=profiles,
            generating_model=model.upper(),
            subset_size=subset_size or len(profiles),
            replication=replication,
            q_matrix=q,
        )
        console.print(
            f"[blue]Simulating {students} students over {cell.subset_size} of "
            f"{len(profiles)} {resolved.label} profiles ({cell.generating_model})...[/blue]"
        )
        data = simulate_cell(cell, cfg)

        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_q_matrix_to_csv(q, out_dir / "q_matrix.csv")
        write_responses_to_csv(data.responses, out_dir / "responses.csv")
        write_capability_to_csv(data.capability, out_dir / "capability.csv")
        write_truth_to_csv(data.truth, out_dir / "truth.csv")
        console.print(f"[green]✓ Dataset saved to {out_dir}[/green]")

    except Exception as e:
        console.print(f"[red]Error: {str(e)}[/red]")
        raise typer.Exit(1) from e


@app.command()
def cluster(
    capability: str = typer.Option(..., "--capability", help="Capability score CSV"),
    method: str = typer.Option(..., "--method", help=f"One of: {', '.join(ALL_METHODS)}"),
    hierarchy: str = typer.Option(..., "--hierarchy", help="Hierarchy name or JSON file"),
    out: str = typer.Option(..., "-o", "--out", help="Path to save assignments CSV"),
    seed: int = typer.Option(0, "--seed", help="Seed for starting centers and pseudodata"),
    k: int = typer.Option(6, "--k", help="Number of skills"),
    q_matrix: Optional[str] = typer.Option(
        None, "--q-matrix", help="Q-matrix CSV (required by pseudo methods)"
    ),
    truth: Optional[str] = typer.Option(
        None, "--truth", help="True profile CSV; prints ARI and profile accuracy"
    ),
    trace_csv: Optional[str] = typer.Option(
        None, "--trace-csv", help="Path to save the per-iteration objective"
    ),
    zero_noise: bool = typer.Option(
        False, "--zero-noise", help="Noise-free pseudodata for pseudo methods"
    ),
):
    """Run one clustering method on a capability score CSV."""
    try:
        # No Q-matrix is drawn here, so J and q_mix only need to be consistent.
        cfg = ExperimentConfig(
            K=k,
            J=k,
            q_mix=[(1, k)],
            seed=seed,
            methods=[method],
            zero_noise=zero_noise,
        )
        points = read_capability_from_csv(capability)
        if points.shape[1] != k:
            raise ValueError(f"Capability CSV has {points.shape[1]} skills, expected {k}")
        profiles = enumerate_profiles(load_hierarchy(hierarchy, k))
        q = read_q_matrix_from_csv(q_matrix) if q_matrix else None

        console.print(f"[blue]Clustering {len(points)} students with {method}...[/blue]")
        result = run_method(
            method, points, profiles, q, cfg, derive_rng(seed, "cluster", method)
        )
        labeled = label_clustering(result, profiles)

        write_assignments_to_csv(result, out, labels=labeled.labels)
        console.print(
            f"[green]✓ {result.num_clusters} clusters after {result.iterations} "
            f"iterations, assignments saved to {out}[/green]"
        )
        if labeled.collisions:
            collided = ", ".join(profile_to_string(p) for p in labeled.collisions)
            console.print(f"[yellow]Profiles shared by several clusters: {collided}[/yellow]")

        if trace_csv:
            write_trace_to_csv(result.objective_trace, trace_csv)
            console.print(f"[green]✓ Objective trace saved to {trace_csv}[/green]")

        if truth:
            true_profiles = read_truth_from_csv(truth)
            _, partition = np.unique(true_profiles, axis=0, return_inverse=True)
            ari, degenerate = ari_details(partition, result.assignment)
            accuracy = profile_accuracy(labeled.student_profiles(), true_profiles)
            console.print(f"ARI: {ari:.6f}{' (degenerate)' if degenerate else ''}")
            console.print(f"Profile accuracy: {accuracy:.6f}")

    except Exception as e:
        console.print(f"[red]Error: {str(e)}[/red]")
        raise typer.Exit(1) from e


@app.command()
def plot(
    results: str = typer.Option(..., "--results", help="Path to results.csv"),
    out: str = typer.Option(..., "-o", "--out", help="Directory for SVG figures"),
):
    """Draw mean-ARI figures from a results CSV."""
    try:
        console.print(f"[blue]Reading results from {results}...[/blue]")
        rows = read_results_from_csv(results)
        figures = render_figures(rows, out)
        for path in figures:
            console.print(f"  {path}")
        console.print(f"[green]✓ Wrote {len(figures)} figures to {out}[/green]")

    except Exception as e:
        console.print(f"[red]Error: {str(e)}[/red]")
        raise typer.Exit(1) from e
