"""Partition agreement and profile labelling of clusters."""

from collections import Counter
from collections.abc import Sequence
from typing import Union

import numpy as np
from sklearn.metrics import adjusted_rand_score

from ..models import (
    CenterSet,
    ClusteringResult,
    LabeledClustering,
    Profile,
    ProfileSet,
)
from .clustering import exact_squared_distances


def ari_details(partition_1, partition_2) -> tuple[float, bool]:
    """Adjusted Rand Index plus whether the degenerate convention was used.

    When the chance-corrected denominator is zero (both partitions trivial
    in the same way) the ARI is reported as 1.0 and the flag is True.

    Raises:
        ValueError: On a length mismatch or fewer than two points
    """
    first = np.asarray(partition_1).reshape(-1)
    second = np.asarray(partition_2).reshape(-1)
    if first.size != second.size:
        raise ValueError(
            f"Partitions have different lengths ({first.size} vs {second.size})"
        )
    if first.size < 2:
        raise ValueError("ARI needs at least two points")

    # The chance correction vanishes only when both partitions are all
    # singletons or both are a single cluster.
    sizes = {np.unique(first).size, np.unique(second).size}
    degenerate = sizes == {1} or sizes == {first.size}
    return float(adjusted_rand_score(first, second)), degenerate


def adjusted_rand_index(partition_1, partition_2) -> float:
    """Chance-corrected pair-counting agreement; 1.0 for identical partitions."""
    value, _ = ari_details(partition_1, partition_2)
    return value


def nearest_vertex_labels(
    centers: Union[CenterSet, np.ndarray],
    licit: Union[ProfileSet, Sequence[Profile]],
) -> list[Profile]:
    """Label each center with the closest licit hypercube vertex.

    Ties go to the vertex earliest in canonical order. Several centers may
    receive the same label.

    Raises:
        ValueError: On an empty licit set or a dimension mismatch
    """
    if not isinstance(licit, ProfileSet):
        if len(licit) == 0:
            raise ValueError("Cannot label centers against an empty licit set")
        licit = ProfileSet(profiles=licit, order_tag="custom")
    licit = licit.canonical()

    points = centers.centers if isinstance(centers, CenterSet) else centers
    points = np.array(points, dtype=float, ndmin=2)
    if points.shape[1] != licit.num_skills:
        raise ValueError(
            f"Centers have {points.shape[1]} coordinates, "
            f"profiles have {licit.num_skills} skills"
        )

    vertices = licit.as_array().astype(float)
    nearest = exact_squared_distances(points, vertices).argmin(axis=1)
    return [licit[int(i)] for i in nearest]


def label_collisions(labels: Sequence[Profile]) -> tuple[Profile, ...]:
    """Labels given to more than one cluster, in order of first appearance."""
    counts = Counter(labels)
    return tuple(label for label in counts if counts[label] > 1)


def label_clustering(
    result: ClusteringResult, licit: ProfileSet
) -> LabeledClustering:
    """Attach a profile to every cluster.

    Labels carried by the result (from pseudocenters or pseudodata) are
    kept; clusters without one get their nearest licit vertex.
    """
    carried = result.labels or (None,) * result.num_clusters
    fallback = nearest_vertex_labels(result.centers, licit)
    labels = tuple(
        label if label is not None else vertex
        for label, vertex in zip(carried, fallback)
    )
    return LabeledClustering(
        result=result, labels=labels, collisions=label_collisions(labels)
    )


def profile_accuracy(assigned, truth) -> float:
    """Fraction of students whose assigned profile matches exactly.

    Raises:
        ValueError: If the two profile arrays differ in shape
    """
    predicted = np.asarray(assigned, dtype=int)
    actual = np.asarray(truth, dtype=int)
    if predicted.shape != actual.shape:
        raise ValueError(
            f"Assigned profiles {predicted.shape} and truth {actual.shape} differ"
        )
    if predicted.size == 0:
        raise ValueError("No students to score")
    predicted = predicted.reshape(len(predicted), -1)
    actual = actual.reshape(len(actual), -1)
    return float(np.all(predicted == actual, axis=1).mean())
