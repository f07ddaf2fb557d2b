"""Run metadata tracking and reporting utilities."""

import json
from collections import Counter
from collections.abc import Iterable
from pathlib import Path
from typing import Union

from .. import __version__
from ..models import (
    ExperimentConfig,
    QMatrix,
    ResultRow,
    RunMetadata,
    SkippedCell,
)

CONVENTIONS: dict[str, str] = {
    "profile_order": (
        "mastery count ascending, then bit string descending (skill 1 most "
        "significant); prefix subsets take the first profiles in this order"
    ),
    "rescaled_centers": (
        "center_k = min_k + alpha_k * (max_k - min_k) over observed capability "
        "scores; reconstruction of the rescaling rule"
    ),
    "degenerate_ari": (
        "ARI is 1.0 when the chance-corrected denominator is zero; such rows "
        "carry the degenerate_ari flag"
    ),
    "cluster_labels": (
        "pseudocenter and pseudodata labels are kept; other clusters take the "
        "nearest licit vertex, ties to the earliest canonical profile"
    ),
    "timings": "runtime_ms is written only when record_timings is true",
}


def _flag_kind(flag: str) -> str:
    """Group error flags by exception type so counts stay readable."""
    if flag.startswith("error:"):
        return flag.split(":", 2)[0] + ":" + flag.split(":", 2)[1]
    return flag


class RunRecorder:
    """Collects seeds, Q-matrices, skipped cells and flags during a run."""

    def __init__(self, config: ExperimentConfig):
        """Initialize run recorder.

        Args:
            config: Experiment configuration being run
        """
        self.config = config
        self.q_matrices: dict[str, QMatrix] = {}
        self.skipped_cells: list[SkippedCell] = []
        self.flag_counts: Counter[str] = Counter()
        self.total_rows = 0
        self.error_rows = 0

    def record_q_matrix(self, key: str, q_matrix: QMatrix) -> None:
        self.q_matrices[key] = q_matrix

    def record_skipped(self, cell: SkippedCell) -> None:
        self.skipped_cells.append(cell)

    def record_rows(self, rows: Iterable[ResultRow]) -> None:
        """Count rows, failed rows and every flag raised."""
        for row in rows:
            self.total_rows += 1
            if row.failed:
                self.error_rows += 1
            self.flag_counts.update(_flag_kind(flag) for flag in row.flags)

    def get_metadata(self) -> RunMetadata:
        """Build the metadata for the run so far.

        Returns:
            RunMetadata with deterministic contents (no wall-clock data)
        """
        return RunMetadata(
            version=__version__,
            master_seed=self.config.seed,
            config=self.config.model_dump(mode="json"),
            q_policy=(
                "per_replication"
                if self.config.resample_q_per_replication
                else "shared"
            ),
            q_matrices={
                key: [list(row) for row in q.entries]
                for key, q in self.q_matrices.items()
            },
            skipped_cells=self.skipped_cells,
            flag_counts=dict(sorted(self.flag_counts.items())),
            total_rows=self.total_rows,
            error_rows=self.error_rows,
            conventions=CONVENTIONS,
        )

    def save(self, filepath: Union[str, Path]) -> None:
        """Save run metadata to a JSON file.

        Args:
            filepath: Path to save the metadata
        """
        try:
            with open(filepath, "w", encoding="utf-8") as f:
                json.dump(self.get_metadata().model_dump(mode="json"), f, indent=2)
                f.write("\n")
        except OSError as e:
            raise OSError(f"Could not write run metadata {filepath}: {e}") from e

    def print_summary(self, console) -> None:
        """Print run summary to console.

        Args:
            console: Rich console instance
        """
        meta = self.get_metadata()

        console.print("\n[bold cyan]Run Summary[/bold cyan]")
        console.print(f"Master seed: {meta.master_seed}")
        console.print(f"Q-matrix policy: {meta.q_policy} ({len(meta.q_matrices)} drawn)")
        console.print(f"Rows written: {meta.total_rows}")

        if meta.error_rows > 0:
            console.print(f"[yellow]Failed method runs: {meta.error_rows}[/yellow]")
        if meta.skipped_cells:
            console.print(
                f"[yellow]Skipped grid cells: {len(meta.skipped_cells)}[/yellow]"
            )

        if meta.flag_counts:
            console.print("\n[bold]Flags:[/bold]")
            for flag, count in meta.flag_counts.items():
                console.print(f"  {flag}: {count:,}")


def load_run_meta(filepath: Union[str, Path]) -> RunMetadata:
    """Load run metadata from a JSON file.

    Args:
        filepath: Path to ``run_meta.json``

    Returns:
        RunMetadata object

    Raises:
        FileNotFoundError: If the file doesn't exist
    """
    try:
        with open(filepath, encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise FileNotFoundError(f"Run metadata not found: {filepath}")
    return RunMetadata(**data)
