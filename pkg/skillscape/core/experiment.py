"""Simulation grid: data generation, every clustering method, scoring."""

import logging
import os
import time
from collections.abc import Callable, Iterable
from concurrent.futures import ProcessPoolExecutor
from itertools import repeat
from typing import Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict

from ..models import (
    ClusteringResult,
    ExperimentConfig,
    GeneratingModel,
    Hierarchy,
    HierarchySpec,
    ProfileSet,
    PseudoData,
    QMatrix,
    ResultRow,
    SkippedCell,
)
from ..utils.run_meta import RunRecorder
from ..utils.seeding import derive_rng
from .capability import capability_from_responses
from .clustering import (
    centers_random,
    centers_rescaled,
    empty_kmeans,
    hierarchical_clustering,
    kmeans,
    pseudo_means,
    simulate_pseudodata,
)
from .evaluation import ari_details, label_clustering, profile_accuracy
from .hierarchy import build_canonical_hierarchy, enumerate_profiles, select_subset
from .response_sim import (
    assign_students,
    sample_params,
    sample_q_matrix,
    simulate_responses,
    zero_noise_params,
)
from .semisupervised import semisupervised_clustering

logger = logging.getLogger(__name__)

WORKERS_ENV = "SKILLSCAPE_WORKERS"
PREFIX_SUBSET_HIERARCHIES = ("linear", "convergent", "divergent")

Progress = Callable[[Iterable, int], Iterable]


class GridCell(BaseModel):
    """One (hierarchy, generating model, subset size, replication) coordinate."""

    model_config = ConfigDict(frozen=True)

    hierarchy: Hierarchy
    profiles: ProfileSet
    generating_model: GeneratingModel
    subset_size: int
    replication: int
    q_matrix: QMatrix

    @property
    def subset_mode(self) -> str:
        if self.hierarchy.name in PREFIX_SUBSET_HIERARCHIES:
            return "prefix"
        return "random"


class CellData(BaseModel):
    """Simulated students of one grid cell."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    truth: np.ndarray
    responses: np.ndarray
    capability: np.ndarray

    @property
    def truth_partition(self) -> np.ndarray:
        """Class index of every student's true profile."""
        _, inverse = np.unique(self.truth, axis=0, return_inverse=True)
        return inverse.reshape(-1)


MethodRunner = Callable[
    [np.ndarray, ProfileSet, Optional[QMatrix], ExperimentConfig, np.random.Generator],
    ClusteringResult,
]


def resolve_hierarchy(entry: Union[str, HierarchySpec], num_skills: int) -> Hierarchy:
    """Turn a config entry (canonical name or explicit spec) into a Hierarchy.

    Raises:
        ValueError: If the hierarchy does not have ``num_skills`` skills
    """
    if isinstance(entry, str):
        return build_canonical_hierarchy(entry, num_skills)
    hierarchy = entry.to_hierarchy()
    if hierarchy.num_skills != num_skills:
        raise ValueError(
            f"Hierarchy {hierarchy.label} has {hierarchy.num_skills} skills, "
            f"config has K={num_skills}"
        )
    return hierarchy


def resolve_workers(cfg: ExperimentConfig, workers: Optional[int] = None) -> int:
    """Worker count: explicit argument, then SKILLSCAPE_WORKERS, then config.

    Raises:
        ValueError: If the chosen value is not a positive integer
    """
    if workers is None:
        env_value = os.getenv(WORKERS_ENV)
        if env_value:
            try:
                workers = int(env_value)
            except ValueError:
                raise ValueError(f"{WORKERS_ENV} must be an integer, got '{env_value}'")
        else:
            workers = cfg.workers
    if workers < 1:
        raise ValueError(f"Worker count must be at least 1, got {workers}")
    return workers


def draw_q_matrix(cfg: ExperimentConfig, replication: Optional[int] = None) -> QMatrix:
    """Shared Q-matrix (``replication=None``) or the one for a replication."""
    coordinates = ("q-matrix",) if replication is None else ("q-matrix", replication)
    return sample_q_matrix(
        cfg.J,
        cfg.K,
        cfg.q_mix,
        derive_rng(cfg.seed, *coordinates),
        max_retries=cfg.q_max_retries,
    )


def plan_grid(
    cfg: ExperimentConfig, recorder: Optional[RunRecorder] = None
) -> tuple[list[GridCell], list[SkippedCell]]:
    """Every feasible grid cell in output order, plus the skipped ones.

    Cells are ordered by hierarchy, generating model, subset size and
    replication, following the config's list order.
    """
    hierarchies = [resolve_hierarchy(entry, cfg.K) for entry in cfg.hierarchies]
    labels = [h.label for h in hierarchies]
    if len(set(labels)) != len(labels):
        raise ValueError(f"Duplicate hierarchy names in config: {labels}")

    if cfg.resample_q_per_replication:
        q_matrices = {
            rep: draw_q_matrix(cfg, rep) for rep in range(cfg.replications)
        }
        keys = {rep: f"replication-{rep}" for rep in range(cfg.replications)}
    else:
        shared = draw_q_matrix(cfg)
        q_matrices = {rep: shared for rep in range(cfg.replications)}
        keys = {0: "shared"}
    if recorder is not None:
        for rep, key in keys.items():
            recorder.record_q_matrix(key, q_matrices[rep])

    cells: list[GridCell] = []
    skipped: list[SkippedCell] = []
    for hierarchy in hierarchies:
        profiles = enumerate_profiles(hierarchy)
        num_profiles = len(profiles)
        logger.info("Hierarchy %s admits %d profiles", hierarchy.label, num_profiles)

        sizes = (
            list(range(3, num_profiles + 1))
            if cfg.subset_sizes == "all"
            else list(cfg.subset_sizes)
        )
        for model in cfg.generating_models:
            reasons: dict[int, str] = {}
            if not sizes:
                reasons[num_profiles] = (
                    f"hierarchy admits {num_profiles} profiles, fewer than 3"
                )
            for size in sizes:
                if size > num_profiles:
                    reasons[size] = f"subset size exceeds the {num_profiles} profiles"
                elif size > cfg.N:
                    reasons[size] = f"cannot cover {size} profiles with N={cfg.N}"

            for size, reason in reasons.items():
                logger.warning(
                    "Skipping %s / %s / size %d: %s",
                    hierarchy.label,
                    model,
                    size,
                    reason,
                )
                skipped.append(
                    SkippedCell(
                        hierarchy=hierarchy.label,
                        generating_model=model,
                        subset_size=size,
                        reason=reason,
                    )
                )

            for size in sizes:
                if size in reasons:
                    continue
                for rep in range(cfg.replications):
                    cells.append(
                        GridCell(
                            hierarchy=hierarchy,
                            profiles=profiles,
                            generating_model=model,
                            subset_size=size,
                            replication=rep,
                            q_matrix=q_matrices[rep],
                        )
                    )

    if recorder is not None:
        for cell in skipped:
            recorder.record_skipped(cell)
    return cells, skipped


def simulate_cell(cell: GridCell, cfg: ExperimentConfig) -> CellData:
    """Subset, students, responses and capability scores for one cell.

    The subset and the students depend only on (hierarchy, size,
    replication), so both generating models see the same students.
    """
    label = cell.hierarchy.label
    student_rng = derive_rng(
        cfg.seed, "students", label, cell.subset_size, cell.replication
    )
    subset = select_subset(cell.profiles, cell.subset_size, cell.subset_mode, student_rng)
    truth = assign_students(cfg.N, subset, student_rng)

    response_rng = derive_rng(
        cfg.seed,
        "responses",
        label,
        cell.generating_model,
        cell.subset_size,
        cell.replication,
    )
    if cfg.zero_noise:
        params = zero_noise_params(cell.generating_model, cell.q_matrix)
    else:
        size = cell.q_matrix.num_items if cell.generating_model == "DINA" else cfg.K
        params = sample_params(
            cell.generating_model,
            size,
            response_rng,
            slip_max=cfg.slip_max,
            guess_max=cfg.guess_max,
        )
    responses = simulate_responses(truth, cell.q_matrix, params, response_rng)
    return CellData(
        truth=truth,
        responses=responses,
        capability=capability_from_responses(responses, cell.q_matrix),
    )


# Method registry


def _run_hc(points, profiles, q_matrix, cfg, rng) -> ClusteringResult:
    return hierarchical_clustering(points, len(profiles))


def _run_kmeans(points, profiles, q_matrix, cfg, rng) -> ClusteringResult:
    return kmeans(
        points,
        len(profiles),
        rng,
        restarts=cfg.kmeans_restarts,
        max_iter=cfg.max_iter,
    )


def _run_emptyk_random(points, profiles, q_matrix, cfg, rng) -> ClusteringResult:
    init = centers_random(points, len(profiles), rng)
    return empty_kmeans(points, init, max_iter=cfg.max_iter, method_tag="emptyk_random")


def _run_emptyk_rescaled(points, profiles, q_matrix, cfg, rng) -> ClusteringResult:
    init = centers_rescaled(points, profiles)
    return empty_kmeans(
        points, init, max_iter=cfg.max_iter, method_tag="emptyk_rescaled"
    )


def _pseudodata(
    model: GeneratingModel,
    profiles: ProfileSet,
    q_matrix: Optional[QMatrix],
    cfg: ExperimentConfig,
    rng: np.random.Generator,
) -> PseudoData:
    if q_matrix is None:
        raise ValueError(f"{model} pseudodata needs a Q-matrix")
    return simulate_pseudodata(
        profiles,
        q_matrix,
        model,
        rng,
        per_profile=cfg.pseudo_M,
        slip_max=cfg.slip_max,
        guess_max=cfg.guess_max,
        params=zero_noise_params(model, q_matrix) if cfg.zero_noise else None,
    )


def _emptyk_pseudo(model: GeneratingModel) -> MethodRunner:
    def run(points, profiles, q_matrix, cfg, rng) -> ClusteringResult:
        pseudo = _pseudodata(model, profiles, q_matrix, cfg, rng)
        return empty_kmeans(
            points,
            pseudo_means(pseudo, profiles),
            max_iter=cfg.max_iter,
            method_tag=f"emptyk_pseudo_{model.lower()}",
        )

    return run


def _semisupervised(model: GeneratingModel) -> MethodRunner:
    def run(points, profiles, q_matrix, cfg, rng) -> ClusteringResult:
        pseudo = _pseudodata(model, profiles, q_matrix, cfg, rng)
        return semisupervised_clustering(points, pseudo, profiles, max_iter=cfg.max_iter)

    return run


METHODS: dict[str, MethodRunner] = {
    "hc": _run_hc,
    "kmeans": _run_kmeans,
    "emptyk_random": _run_emptyk_random,
    "emptyk_rescaled": _run_emptyk_rescaled,
    "emptyk_pseudo_dina": _emptyk_pseudo("DINA"),
    "emptyk_pseudo_nida": _emptyk_pseudo("NIDA"),
    "semisup_dina": _semisupervised("DINA"),
    "semisup_nida": _semisupervised("NIDA"),
}


def run_method(
    method: str,
    points: np.ndarray,
    profiles: ProfileSet,
    q_matrix: Optional[QMatrix],
    cfg: ExperimentConfig,
    rng: np.random.Generator,
) -> ClusteringResult:
    """Run one named method allowing at most ``len(profiles)`` clusters.

    Args:
        method: Registered method name
        points: Capability scores, one row per student
        profiles: Licit profiles of the hierarchy
        q_matrix: Q-matrix for pseudodata; only the pseudo methods need it
        cfg: Supplies restarts, iteration cap, pseudo_M and noise settings
        rng: Random stream for starting centers and pseudodata

    Raises:
        ValueError: If the method name is unknown or a needed Q-matrix is missing
    """
    if method not in METHODS:
        raise ValueError(f"Unknown method '{method}'. Available: {list(METHODS)}")
    return METHODS[method](points, profiles, q_matrix, cfg, rng)


def _base_row(cell: GridCell, method: str) -> dict:
    num_profiles = len(cell.profiles)
    return {
        "hierarchy": cell.hierarchy.label,
        "generating_model": cell.generating_model,
        "method": method,
        "L_h": num_profiles,
        "subset_size": cell.subset_size,
        "proportion": cell.subset_size / num_profiles,
        "replication": cell.replication,
    }


def _error_row(cell: GridCell, method: str, error: Exception) -> ResultRow:
    message = " ".join(str(error).split()).replace(";", ",")
    return ResultRow(
        **_base_row(cell, method),
        flags=[f"error:{type(error).__name__}: {message}"],
    )


def score_method(
    method: str, cell: GridCell, data: CellData, cfg: ExperimentConfig
) -> ResultRow:
    """Cluster, label and score one method; failures become error rows."""
    rng = derive_rng(
        cfg.seed,
        "method",
        cell.hierarchy.label,
        cell.generating_model,
        cell.subset_size,
        cell.replication,
        method,
    )
    start = time.perf_counter()
    try:
        result = run_method(
            method, data.capability, cell.profiles, cell.q_matrix, cfg, rng
        )
        runtime_ms = (time.perf_counter() - start) * 1000.0
        labeled = label_clustering(result, cell.profiles)
        ari, degenerate = ari_details(data.truth_partition, result.assignment)
        accuracy = profile_accuracy(labeled.student_profiles(), data.truth)
    except Exception as e:  # noqa: BLE001
        logger.warning(
            "%s failed on %s / %s / size %d / rep %d: %s",
            method,
            cell.hierarchy.label,
            cell.generating_model,
            cell.subset_size,
            cell.replication,
            e,
        )
        return _error_row(cell, method, e)

    flags = []
    if degenerate:
        flags.append("degenerate_ari")
    if labeled.collisions:
        flags.append("label_collision")
    return ResultRow(
        **_base_row(cell, method),
        ARI=ari,
        clusters_found=result.num_clusters,
        profile_accuracy=accuracy,
        runtime_ms=runtime_ms if cfg.record_timings else None,
        flags=flags,
    )


def run_cell(cell: GridCell, cfg: ExperimentConfig) -> list[ResultRow]:
    """All configured methods on one grid cell, in config method order."""
    logger.debug(
        "Cell %s / %s / size %d / rep %d",
        cell.hierarchy.label,
        cell.generating_model,
        cell.subset_size,
        cell.replication,
    )
    try:
        data = simulate_cell(cell, cfg)
    except Exception as e:  # noqa: BLE001
        logger.warning(
            "Data generation failed on %s / %s / size %d / rep %d: %s",
            cell.hierarchy.label,
            cell.generating_model,
            cell.subset_size,
            cell.replication,
            e,
        )
        return [_error_row(cell, method, e) for method in cfg.methods]
    return [score_method(method, cell, data, cfg) for method in cfg.methods]


def run_experiment(
    cfg: ExperimentConfig,
    recorder: Optional[RunRecorder] = None,
    workers: Optional[int] = None,
    progress: Optional[Progress] = None,
) -> list[ResultRow]:
    """Run the whole grid and return one row per (cell, method).

    Rows come back in grid order regardless of the worker count: cells are
    mapped in order and their rows concatenated.

    Args:
        cfg: Validated experiment configuration
        recorder: Optional collector for run metadata
        workers: Process count; overrides SKILLSCAPE_WORKERS and the config
        progress: Optional wrapper ``(iterable, total) -> iterable`` for
            progress display

    Returns:
        List of ResultRow objects
    """
    cells, skipped = plan_grid(cfg, recorder)
    num_workers = resolve_workers(cfg, workers)
    logger.info(
        "Running %d grid cells x %d methods on %d worker(s) (%d skipped)",
        len(cells),
        len(cfg.methods),
        num_workers,
        len(skipped),
    )

    if num_workers == 1 or len(cells) <= 1:
        per_cell: Iterable[list[ResultRow]] = map(run_cell, cells, repeat(cfg))
        if progress is not None:
            per_cell = progress(per_cell, len(cells))
        results = list(per_cell)
    else:
        chunksize = max(1, len(cells) // (num_workers * 4))
        with ProcessPoolExecutor(max_workers=num_workers) as pool:
            per_cell = pool.map(run_cell, cells, repeat(cfg), chunksize=chunksize)
            if progress is not None:
                per_cell = progress(per_cell, len(cells))
            results = list(per_cell)

    rows = [row for cell_rows in results for row in cell_rows]
    if recorder is not None:
        recorder.record_rows(rows)
    return rows
