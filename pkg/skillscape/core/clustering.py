"""Hierarchical clustering, k-means, empty k-means and their starting centers."""

import logging
from typing import Optional

import numpy as np
from sklearn.metrics.pairwise import euclidean_distances

from ..models import (
    CenterSet,
    ClusteringResult,
    Dendrogram,
    GeneratingModel,
    ModelParams,
    ProfileSet,
    PseudoData,
    QMatrix,
)
from .capability import capability_from_responses
from .response_sim import (
    DEFAULT_GUESS_MAX,
    DEFAULT_SLIP_MAX,
    sample_params,
    simulate_responses,
)

logger = logging.getLogger(__name__)

DEFAULT_MAX_ITER = 300
DEFAULT_RESTARTS = 5
DEFAULT_PSEUDO_M = 100


def as_points(points) -> np.ndarray:
    """Coerce input to an ``N x K`` float array; 1-D input is one coordinate."""
    array = np.asarray(points, dtype=float)
    if array.ndim == 1:
        array = array.reshape(-1, 1)
    if array.ndim != 2:
        raise ValueError(f"Points must be an N x K array, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise ValueError("Points must have finite coordinates")
    return array


def relabel(partition) -> np.ndarray:
    """Renumber class labels 0, 1, ... in order of first appearance."""
    values = np.asarray(partition).reshape(-1)
    _, first, inverse = np.unique(values, return_index=True, return_inverse=True)
    order = np.argsort(np.argsort(first))
    return order[inverse.reshape(-1)]


def squared_distances(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """``N x C`` matrix of squared Euclidean distances."""
    return euclidean_distances(points, centers, squared=True)


def exact_squared_distances(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Squared distances from coordinate differences, for exact ties and heights."""
    diff = points[:, np.newaxis, :] - centers[np.newaxis, :, :]
    return (diff**2).sum(axis=2)


def nearest_centers(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Index of the nearest center per point; ties go to the lowest index."""
    return squared_distances(points, centers).argmin(axis=1)


def within_cluster_ss(
    points: np.ndarray, assignment: np.ndarray, centers: np.ndarray
) -> float:
    """Sum of squared distances from each point to its cluster center."""
    return float(((points - centers[assignment]) ** 2).sum())


def update_centers(
    points: np.ndarray,
    assignment: np.ndarray,
    centers: np.ndarray,
    extra_points: Optional[np.ndarray] = None,
    extra_assignment: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Cluster means, optionally averaging in extra (penalty) points.

    A center with nothing assigned keeps its previous position.
    """
    sums = np.zeros_like(centers)
    counts = np.zeros(len(centers))
    np.add.at(sums, assignment, points)
    np.add.at(counts, assignment, 1.0)
    if extra_points is not None and extra_assignment is not None:
        np.add.at(sums, extra_assignment, extra_points)
        np.add.at(counts, extra_assignment, 1.0)

    updated = centers.copy()
    filled = counts > 0
    updated[filled] = sums[filled] / counts[filled, np.newaxis]
    return updated


def repair_empty_clusters(
    points: np.ndarray, assignment: np.ndarray, centers: np.ndarray
) -> tuple[np.ndarray, bool]:
    """Move each empty center onto the point farthest from it.

    Returns:
        Tuple of (centers, whether any center moved)
    """
    counts = np.bincount(assignment, minlength=len(centers))
    empty = np.flatnonzero(counts == 0)
    if empty.size == 0:
        return centers, False

    repaired = centers.copy()
    for j in empty:
        farthest = int(((points - repaired[j]) ** 2).sum(axis=1).argmax())
        repaired[j] = points[farthest]
        logger.debug("Empty cluster %d re-seeded at point %d", j, farthest)
    return repaired, True


def drop_empty_clusters(
    assignment: np.ndarray, centers: np.ndarray, labels: Optional[list] = None
) -> tuple[np.ndarray, np.ndarray, Optional[list]]:
    """Remove centers with no points and renumber the assignment."""
    keep = np.bincount(assignment, minlength=len(centers)) > 0
    if keep.all():
        return assignment, centers, labels
    remap = np.cumsum(keep) - 1
    kept_labels = (
        [label for label, kept in zip(labels, keep) if kept]
        if labels is not None
        else None
    )
    return remap[assignment], centers[keep], kept_labels


def result_from_partition(
    points, partition, method_tag: str, iterations: int = 0
) -> ClusteringResult:
    """Wrap an arbitrary partition as a result with cluster-mean centers."""
    data = as_points(points)
    assignment = relabel(partition)
    num_clusters = int(assignment.max()) + 1
    centers = update_centers(
        data, assignment, np.zeros((num_clusters, data.shape[1]))
    )
    return ClusteringResult(
        assignment=assignment,
        centers=centers,
        objective=within_cluster_ss(data, assignment, centers),
        iterations=iterations,
        method_tag=method_tag,
    )


# Hierarchical clustering


def hclust_complete(points) -> Dendrogram:
    """Complete-linkage agglomerative clustering on Euclidean distance.

    At every step the closest pair of active clusters merges; among equal
    distances the pair with the lowest (row, column) slot index wins.

    Raises:
        ValueError: If no points are given
    """
    data = as_points(points)
    n = len(data)
    if n == 0:
        raise ValueError("Cannot cluster an empty point set")

    dist = np.sqrt(exact_squared_distances(data, data))
    np.fill_diagonal(dist, np.inf)
    ids = np.arange(1, n + 1)
    merges: list[tuple[int, int, float]] = []

    for step in range(n - 1):
        i, j = divmod(int(np.argmin(dist)), n)
        merges.append((int(ids[i]), int(ids[j]), float(dist[i, j])))

        merged = np.maximum(dist[i], dist[j])
        dist[i, :] = merged
        dist[:, i] = merged
        dist[i, i] = np.inf
        dist[j, :] = np.inf
        dist[:, j] = np.inf
        ids[i] = n + step + 1

    return Dendrogram(num_leaves=n, merges=merges)


def cut_to_clusters(dendrogram: Dendrogram, num_clusters: int) -> np.ndarray:
    """Partition obtained by applying the first N - c merges."""
    n = dendrogram.num_leaves
    if not 1 <= num_clusters <= n:
        raise ValueError(f"Cannot cut {n} leaves into {num_clusters} clusters")

    parent: dict[int, int] = {}
    for step, (a, b, _) in enumerate(dendrogram.merges[: n - num_clusters]):
        parent[a] = parent[b] = n + step + 1

    roots = []
    for leaf in range(1, n + 1):
        node = leaf
        while node in parent:
            node = parent[node]
        roots.append(node)
    return relabel(roots)


def cut_largest_gap(dendrogram: Dendrogram, max_clusters: int) -> np.ndarray:
    """Cut inside the largest jump between consecutive merge heights.

    The gap above the final merge has size zero and stands for a single
    cluster. Ties go to the cut with fewer clusters. If the chosen cut has
    more than ``max_clusters`` clusters, the dendrogram is cut to exactly
    ``max_clusters`` instead.

    Returns:
        Cluster index per leaf, numbered by first appearance
    """
    if max_clusters < 1:
        raise ValueError(f"max_clusters must be at least 1, got {max_clusters}")

    n = dendrogram.num_leaves
    if n == 1:
        return np.zeros(1, dtype=int)

    heights = dendrogram.heights
    best_clusters, best_gap = 1, 0.0
    # Gap after merge m keeps n - m clusters; scan from the fewest clusters up.
    for m in range(n - 2, 0, -1):
        gap = heights[m] - heights[m - 1]
        if gap > best_gap:
            best_gap, best_clusters = gap, n - m

    if best_clusters > max_clusters:
        logger.debug(
            "Largest gap gives %d clusters; capping at %d", best_clusters, max_clusters
        )
    return cut_to_clusters(dendrogram, min(best_clusters, max_clusters))


def hierarchical_clustering(points, max_clusters: int) -> ClusteringResult:
    """Complete linkage cut at the largest merge gap, capped at ``max_clusters``."""
    dendrogram = hclust_complete(points)
    partition = cut_largest_gap(dendrogram, max_clusters)
    merges_applied = dendrogram.num_leaves - (int(partition.max()) + 1)
    return result_from_partition(points, partition, "hc", iterations=merges_applied)


# k-means family


def kmeans_from_centers(
    points,
    init: CenterSet,
    max_iter: int = DEFAULT_MAX_ITER,
    method_tag: str = "kmeans",
) -> ClusteringResult:
    """One Lloyd run from fixed starting centers.

    Empty clusters are re-seeded at the point farthest from their center.
    Stops when the assignment no longer changes or after ``max_iter`` steps.
    """
    data = as_points(points)
    centers = init.centers.copy()
    if centers.shape[1] != data.shape[1]:
        raise ValueError(
            f"Centers have {centers.shape[1]} coordinates, points have {data.shape[1]}"
        )

    assignment: Optional[np.ndarray] = None
    trace: list[float] = []
    iterations = 0
    for iterations in range(1, max_iter + 1):
        current = nearest_centers(data, centers)
        centers, repaired = repair_empty_clusters(data, current, centers)
        if repaired:
            assignment = current
            continue
        if assignment is not None and np.array_equal(current, assignment):
            break
        assignment = current
        centers = update_centers(data, assignment, centers)
        trace.append(within_cluster_ss(data, assignment, centers))
        logger.debug("%s iteration %d objective %.6f", method_tag, iterations, trace[-1])

    assignment, centers, _ = drop_empty_clusters(assignment, centers)
    return ClusteringResult(
        assignment=assignment,
        centers=centers,
        objective=within_cluster_ss(data, assignment, centers),
        iterations=iterations,
        method_tag=method_tag,
        objective_trace=tuple(trace),
    )


def kmeans(
    points,
    k: int,
    rng: np.random.Generator,
    restarts: int = DEFAULT_RESTARTS,
    max_iter: int = DEFAULT_MAX_ITER,
) -> ClusteringResult:
    """Lloyd's k-means with random data points as starting centers.

    Returns the restart with the lowest objective (earliest on ties).

    Raises:
        ValueError: If ``k`` exceeds the number of distinct points
    """
    data = as_points(points)
    if restarts < 1:
        raise ValueError(f"Need at least one restart, got {restarts}")

    best: Optional[ClusteringResult] = None
    for restart in range(restarts):
        init = centers_random(data, k, rng)
        result = kmeans_from_centers(data, init, max_iter=max_iter)
        logger.debug("kmeans restart %d objective %.6f", restart + 1, result.objective)
        if best is None or result.objective < best.objective:
            best = result
    return best


def empty_kmeans(
    points,
    init: CenterSet,
    max_iter: int = DEFAULT_MAX_ITER,
    method_tag: str = "emptyk",
) -> ClusteringResult:
    """k-means that permanently drops any center left without points.

    Returns between 1 and ``len(init)`` clusters. Center labels, when
    present, follow their surviving centers.
    """
    data = as_points(points)
    centers = init.centers.copy()
    if centers.shape[1] != data.shape[1]:
        raise ValueError(
            f"Centers have {centers.shape[1]} coordinates, points have {data.shape[1]}"
        )
    labels = list(init.labels) if init.labels is not None else None

    assignment: Optional[np.ndarray] = None
    trace: list[float] = []
    iterations = 0
    for iterations in range(1, max_iter + 1):
        current = nearest_centers(data, centers)
        before = len(centers)
        current, centers, labels = drop_empty_clusters(current, centers, labels)
        if len(centers) < before:
            logger.debug(
                "%s iteration %d dropped %d empty center(s)",
                method_tag,
                iterations,
                before - len(centers),
            )
        if assignment is not None and np.array_equal(current, assignment):
            break
        assignment = current
        centers = update_centers(data, assignment, centers)
        trace.append(within_cluster_ss(data, assignment, centers))
        logger.debug("%s iteration %d objective %.6f", method_tag, iterations, trace[-1])

    return ClusteringResult(
        assignment=assignment,
        centers=centers,
        objective=within_cluster_ss(data, assignment, centers),
        iterations=iterations,
        method_tag=method_tag,
        labels=tuple(labels) if labels is not None else None,
        objective_trace=tuple(trace),
    )


# Starting centers


def centers_random(points, num_centers: int, rng: np.random.Generator) -> CenterSet:
    """``num_centers`` distinct data points drawn without replacement.

    Raises:
        ValueError: If there are fewer distinct points than requested centers
    """
    distinct = np.unique(as_points(points), axis=0)
    if not 1 <= num_centers <= len(distinct):
        raise ValueError(
            f"Cannot pick {num_centers} centers from {len(distinct)} distinct points"
        )
    chosen = rng.choice(len(distinct), size=num_centers, replace=False)
    return CenterSet(centers=distinct[chosen])


def centers_rescaled(points, profile_set: ProfileSet) -> CenterSet:
    """Profile vertices stretched onto the observed range of each coordinate.

    center_k = min_k + alpha_k * (max_k - min_k), one labelled center per
    profile.
    """
    data = as_points(points)
    if len(data) == 0:
        raise ValueError("Cannot rescale centers without points")
    if profile_set.num_skills != data.shape[1]:
        raise ValueError(
            f"Profiles have {profile_set.num_skills} skills, "
            f"points have {data.shape[1]} coordinates"
        )
    low = data.min(axis=0)
    high = data.max(axis=0)
    centers = low + profile_set.as_array() * (high - low)
    return CenterSet(centers=centers, labels=profile_set.profiles)


def simulate_pseudodata(
    profile_set: ProfileSet,
    q_matrix: QMatrix,
    model: GeneratingModel,
    rng: np.random.Generator,
    per_profile: int = DEFAULT_PSEUDO_M,
    slip_max: float = DEFAULT_SLIP_MAX,
    guess_max: float = DEFAULT_GUESS_MAX,
    params: Optional[ModelParams] = None,
) -> PseudoData:
    """Capability scores of ``per_profile`` simulated students per profile.

    Slip and guess are drawn fresh from the given ranges unless ``params``
    is supplied. Points are grouped by profile, in profile-set order.
    """
    if per_profile < 1:
        raise ValueError(f"Need at least one pseudo student per profile, got {per_profile}")
    if profile_set.num_skills != q_matrix.num_skills:
        raise ValueError(
            f"Profiles have {profile_set.num_skills} skills, "
            f"Q-matrix has {q_matrix.num_skills}"
        )
    if params is None:
        size = q_matrix.num_items if model == "DINA" else q_matrix.num_skills
        params = sample_params(model, size, rng, slip_max=slip_max, guess_max=guess_max)
    elif params.model != model:
        raise ValueError(f"Parameters are for {params.model}, not {model}")

    alpha = np.repeat(profile_set.as_array(), per_profile, axis=0)
    responses = simulate_responses(alpha, q_matrix, params, rng)
    return PseudoData(
        points=capability_from_responses(responses, q_matrix),
        labels=tuple(
            profile for profile in profile_set.profiles for _ in range(per_profile)
        ),
        model=model,
    )


def pseudo_means(pseudo: PseudoData, profile_set: ProfileSet) -> CenterSet:
    """Per-profile mean of grouped pseudodata."""
    per_profile = len(pseudo.points) // len(profile_set)
    grouped = pseudo.points.reshape(len(profile_set), per_profile, -1)
    return CenterSet(centers=grouped.mean(axis=1), labels=profile_set.profiles)


def centers_pseudo(
    profile_set: ProfileSet,
    q_matrix: QMatrix,
    model: GeneratingModel,
    rng: np.random.Generator,
    per_profile: int = DEFAULT_PSEUDO_M,
    slip_max: float = DEFAULT_SLIP_MAX,
    guess_max: float = DEFAULT_GUESS_MAX,
    params: Optional[ModelParams] = None,
) -> CenterSet:
    """Pseudocenters: mean simulated capability scores for each profile."""
    pseudo = simulate_pseudodata(
        profile_set,
        q_matrix,
        model,
        rng,
        per_profile=per_profile,
        slip_max=slip_max,
        guess_max=guess_max,
        params=params,
    )
    return pseudo_means(pseudo, profile_set)
