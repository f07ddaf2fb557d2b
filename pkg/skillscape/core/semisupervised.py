"""Semisupervised clustering of real points together with labelled pseudodata."""

import itertools
import logging
from collections import Counter
from collections.abc import Sequence
from typing import Optional

import numpy as np

from ..models import (
    CenterSet,
    ClusteringResult,
    ConstraintSet,
    Profile,
    ProfileSet,
    PseudoData,
    canonical_key,
)
from .clustering import (
    DEFAULT_MAX_ITER,
    as_points,
    pseudo_means,
    repair_empty_clusters,
    squared_distances,
    update_centers,
    within_cluster_ss,
)

logger = logging.getLogger(__name__)


def derive_constraints(labels: Sequence[Optional[Profile]]) -> ConstraintSet:
    """Pairwise constraints implied by point labels.

    Points sharing a label are chained by must-links between consecutive
    members; the first member of every label group cannot-links with the
    first member of every other group. Unlabelled (``None``) points take
    part in no constraint.

    Raises:
        ValueError: If no point is labelled
    """
    groups: dict[Profile, list[int]] = {}
    for index, label in enumerate(labels):
        if label is not None:
            groups.setdefault(tuple(label), []).append(index)
    if not groups:
        raise ValueError("Need at least one labelled point to derive constraints")

    must_link = [
        (a, b) for members in groups.values() for a, b in zip(members, members[1:])
    ]
    representatives = [members[0] for members in groups.values()]
    cannot_link = list(itertools.combinations(representatives, 2))
    return ConstraintSet(must_link=must_link, cannot_link=cannot_link)


def _last_writes(
    indices: list[np.ndarray], values: list[np.ndarray]
) -> tuple[np.ndarray, np.ndarray]:
    """Collapse an ordered write log so each index keeps its final value."""
    if not indices:
        return np.empty(0, dtype=int), np.empty(0, dtype=int)
    idx = np.concatenate(indices)
    val = np.concatenate(values)
    if idx.size == 0:
        return idx, val
    _, reversed_pos = np.unique(idx[::-1], return_index=True)
    last = idx.size - 1 - reversed_pos
    return idx[last], val[last]


def _constraint_step(
    dist: np.ndarray,
    nearest: np.ndarray,
    must_link: np.ndarray,
    cannot_link: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Apply the must-link and cannot-link rules to a nearest-center assignment.

    Returns:
        Tuple of (assignment, penalty point indices, penalty center indices)
    """
    write_idx: list[np.ndarray] = []
    write_val: list[np.ndarray] = []
    penalty_points: list[np.ndarray] = []
    penalty_centers: list[np.ndarray] = []

    if must_link.size:
        a, b = must_link[:, 0], must_link[:, 1]
        violated = nearest[a] != nearest[b]
        a, b = a[violated], b[violated]
        ca, cb = nearest[a], nearest[b]

        both_first = 0.5 * (dist[a, ca] + dist[b, ca])
        both_second = 0.5 * (dist[a, cb] + dist[b, cb])
        split = 0.5 * (dist[a, ca] + dist[b, cb]) + 0.5 * (dist[a, cb] + dist[b, ca])
        choice = np.stack([both_first, both_second, split]).argmin(axis=0)

        target_a = np.where(choice == 1, cb, ca)
        target_b = np.where(choice == 0, ca, cb)
        write_idx.append(np.column_stack([a, b]).reshape(-1))
        write_val.append(np.column_stack([target_a, target_b]).reshape(-1))

        is_split = choice == 2
        penalty_points += [a[is_split], b[is_split]]
        penalty_centers += [cb[is_split], ca[is_split]]

    if cannot_link.size and dist.shape[1] > 1:
        a, b = cannot_link[:, 0], cannot_link[:, 1]
        violated = nearest[a] == nearest[b]
        a, b = a[violated], b[violated]
        shared = nearest[a]

        a_farther = dist[a, shared] > dist[b, shared]
        far = np.where(a_farther, a, b)
        close = np.where(a_farther, b, a)

        masked = dist[far].copy()
        masked[np.arange(far.size), shared] = np.inf
        runner_up = masked.argmin(axis=1)

        move_cost = 0.5 * dist[close, shared] + 0.5 * dist[far, runner_up]
        keep_cost = move_cost + 0.5 * dist[far, shared]
        move = move_cost < keep_cost

        write_idx.append(far[move])
        write_val.append(runner_up[move])
        penalty_points.append(far[~move])
        penalty_centers.append(runner_up[~move])

    assignment = nearest.copy()
    idx, val = _last_writes(write_idx, write_val)
    assignment[idx] = val

    if penalty_points:
        return (
            assignment,
            np.concatenate(penalty_points).astype(int),
            np.concatenate(penalty_centers).astype(int),
        )
    return assignment, np.empty(0, dtype=int), np.empty(0, dtype=int)


def _majority_label(labels: list[Profile]) -> Optional[Profile]:
    if not labels:
        return None
    counts = Counter(labels)
    return min(counts, key=lambda label: (-counts[label], canonical_key(label)))


def lcvqe(
    points,
    constraints: ConstraintSet,
    init: CenterSet,
    point_labels: Sequence[Optional[Profile]],
    k: Optional[int] = None,
    max_iter: int = DEFAULT_MAX_ITER,
) -> ClusteringResult:
    """Constrained k-means trading constraint violations against quantisation error.

    Points whose label is ``None`` are the real data; labelled points are
    pseudodata. Each iteration assigns points to their nearest center,
    resolves violated constraints by the cheapest option, and moves every
    center to the mean of its points plus the points charged against it.
    Clusters left without real points are discarded and the result covers
    the real points only, in input order. Each surviving cluster carries the
    majority label of its pseudodata (``None`` when it has none).

    Raises:
        ValueError: On an empty real-point set or invalid constraint indices
    """
    data = as_points(points)
    labels = list(point_labels)
    if len(labels) != len(data):
        raise ValueError(f"Got {len(labels)} labels for {len(data)} points")
    real = np.array([label is None for label in labels], dtype=bool)
    if not real.any():
        raise ValueError("LCVQE needs at least one real (unlabelled) point")
    if constraints.max_index >= len(data):
        raise ValueError(
            f"Constraint index {constraints.max_index} outside the {len(data)} points"
        )
    if k is not None and (k < 1 or k != len(init)):
        raise ValueError(f"k={k} does not match {len(init)} starting centers")

    centers = init.centers.copy()
    if centers.shape[1] != data.shape[1]:
        raise ValueError(
            f"Centers have {centers.shape[1]} coordinates, points have {data.shape[1]}"
        )
    must_link = np.array(constraints.must_link, dtype=int).reshape(-1, 2)
    cannot_link = np.array(constraints.cannot_link, dtype=int).reshape(-1, 2)

    no_penalties = (np.empty(0, dtype=int), np.empty(0, dtype=int))
    assignment: Optional[np.ndarray] = None
    penalties = no_penalties
    trace: list[float] = []
    # Every non-repairing step maps (assignment, penalties) to the same
    # centers, so a repeated state means the run is cycling.
    seen: dict[tuple[bytes, bytes, bytes], int] = {}
    history: list[tuple[np.ndarray, np.ndarray, float]] = []
    iterations = 0
    for iterations in range(1, max_iter + 1):
        dist = squared_distances(data, centers)
        nearest = dist.argmin(axis=1)
        if constraints.is_empty:
            current, (penalty_points, penalty_centers) = nearest, no_penalties
        else:
            current, penalty_points, penalty_centers = _constraint_step(
                dist, nearest, must_link, cannot_link
            )

        centers, repaired = repair_empty_clusters(data, current, centers)
        if repaired:
            assignment = current
            continue
        if (
            assignment is not None
            and np.array_equal(current, assignment)
            and np.array_equal(penalty_points, penalties[0])
            and np.array_equal(penalty_centers, penalties[1])
        ):
            break

        state = (current.tobytes(), penalty_points.tobytes(), penalty_centers.tobytes())
        if state in seen:
            cycle = history[seen[state] :]
            assignment, centers, _ = min(cycle, key=lambda entry: entry[2])
            logger.debug(
                "lcvqe cycle of length %d at iteration %d; keeping its best state",
                len(cycle),
                iterations,
            )
            break

        assignment = current
        penalties = (penalty_points, penalty_centers)
        if penalty_points.size:
            centers = update_centers(
                data, assignment, centers, data[penalty_points], penalty_centers
            )
        else:
            centers = update_centers(data, assignment, centers)
        trace.append(within_cluster_ss(data, assignment, centers))
        seen[state] = len(history)
        history.append((assignment, centers, trace[-1]))
        logger.debug(
            "lcvqe iteration %d objective %.6f (%d penalties)",
            iterations,
            trace[-1],
            penalty_points.size,
        )

    real_assignment = assignment[real]
    surviving = np.unique(real_assignment)
    discarded = len(centers) - surviving.size
    if discarded:
        logger.debug("lcvqe discarded %d cluster(s) without real points", discarded)

    remap = np.full(len(centers), -1)
    remap[surviving] = np.arange(surviving.size)
    cluster_labels = []
    for cluster in surviving:
        members = np.flatnonzero((assignment == cluster) & ~real)
        cluster_labels.append(_majority_label([labels[i] for i in members]))

    real_points = data[real]
    final_assignment = remap[real_assignment]
    final_centers = centers[surviving]
    return ClusteringResult(
        assignment=final_assignment,
        centers=final_centers,
        objective=within_cluster_ss(real_points, final_assignment, final_centers),
        iterations=iterations,
        method_tag="lcvqe",
        labels=tuple(cluster_labels),
        objective_trace=tuple(trace),
    )


def semisupervised_clustering(
    points,
    pseudo: PseudoData,
    profile_set: ProfileSet,
    max_iter: int = DEFAULT_MAX_ITER,
) -> ClusteringResult:
    """LCVQE on pseudodata plus real points, started from the pseudodata means."""
    real_points = as_points(points)
    combined = np.vstack([pseudo.points, real_points])
    labels: list[Optional[Profile]] = list(pseudo.labels) + [None] * len(real_points)
    return lcvqe(
        combined,
        derive_constraints(labels),
        pseudo_means(pseudo, profile_set),
        labels,
        k=len(profile_set),
        max_iter=max_iter,
    )
