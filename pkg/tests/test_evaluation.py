"""Tests for the Adjusted Rand Index and cluster labelling."""

import itertools
from math import comb

import numpy as np
import pytest

from skillscape.core.evaluation import (
    adjusted_rand_index,
    ari_details,
    label_clustering,
    label_collisions,
    nearest_vertex_labels,
    profile_accuracy,
)
from skillscape.models import CenterSet, ClusteringResult

pytestmark = pytest.mark.unit


def brute_force_ari(first, second):
    """ARI from explicit pair counts."""
    n = len(first)
    same_both = same_first = same_second = 0
    for i, j in itertools.combinations(range(n), 2):
        in_first = first[i] == first[j]
        in_second = second[i] == second[j]
        same_first += in_first
        same_second += in_second
        same_both += in_first and in_second
    expected = same_first * same_second / comb(n, 2)
    maximum = (same_first + same_second) / 2
    if maximum == expected:
        return 1.0
    return (same_both - expected) / (maximum - expected)


def test_ari_crossed_pairs_example():
    """Test the crossed two-by-two example."""
    assert adjusted_rand_index([0, 0, 1, 1], [0, 1, 0, 1]) == pytest.approx(-0.5)


def test_ari_identical_and_relabelled():
    """Test that identical partitions score 1 whatever the label names."""
    assert adjusted_rand_index([0, 0, 1, 2], [0, 0, 1, 2]) == pytest.approx(1.0)
    assert adjusted_rand_index([0, 0, 1, 2], [7, 7, 3, 5]) == pytest.approx(1.0)


def test_ari_symmetric(rng):
    """Test ARI(a, b) == ARI(b, a)."""
    for _ in range(20):
        first = rng.integers(0, 4, size=30)
        second = rng.integers(0, 3, size=30)
        assert adjusted_rand_index(first, second) == pytest.approx(
            adjusted_rand_index(second, first)
        )


def test_ari_matches_brute_force(rng):
    """Test the contingency-table ARI against explicit pair counting."""
    for _ in range(100):
        n = int(rng.integers(2, 13))
        first = rng.integers(0, int(rng.integers(1, 6)), size=n).tolist()
        second = rng.integers(0, int(rng.integers(1, 6)), size=n).tolist()
        difference = adjusted_rand_index(first, second) - brute_force_ari(first, second)
        assert abs(difference) < 1e-12


def test_ari_random_partitions_average_zero():
    """Test that independent random partitions average an ARI near 0."""
    rng = np.random.default_rng(77)
    values = [
        adjusted_rand_index(rng.integers(0, 3, size=50), rng.integers(0, 4, size=50))
        for _ in range(10_000)
    ]
    assert abs(np.mean(values)) <= 0.02


def test_ari_degenerate_partitions():
    """Test the zero-denominator convention and its flag."""
    assert ari_details([0, 0, 0], [1, 1, 1]) == (1.0, True)
    assert ari_details([0, 1, 2], [2, 1, 0]) == (1.0, True)

    value, degenerate = ari_details([0, 1, 2, 3], [0, 0, 0, 0])
    assert value == pytest.approx(0.0)
    assert not degenerate


def test_ari_input_errors():
    """Test length mismatch and too few points."""
    with pytest.raises(ValueError, match="different lengths"):
        adjusted_rand_index([0, 1], [0, 1, 1])
    with pytest.raises(ValueError, match="at least two points"):
        adjusted_rand_index([0], [0])


def test_nearest_vertex_labels(two_skill_profiles):
    """Test nearest-vertex labelling and the canonical tie rule."""
    assert nearest_vertex_labels(np.array([[0.9, 0.8]]), two_skill_profiles) == [(1, 1)]
    assert nearest_vertex_labels(np.array([[0.5, 0.0]]), two_skill_profiles) == [(0, 0)]

    centers = CenterSet(centers=[[0.1, 0.0], [0.6, 0.2]])
    assert nearest_vertex_labels(centers, [(1, 1), (1, 0), (0, 0)]) == [(0, 0), (1, 0)]


def test_nearest_vertex_labels_errors(two_skill_profiles):
    """Test empty licit sets and dimension mismatches."""
    with pytest.raises(ValueError, match="empty licit set"):
        nearest_vertex_labels(np.array([[0.0, 0.0]]), [])
    with pytest.raises(ValueError, match="profiles have 2 skills"):
        nearest_vertex_labels(np.array([[0.0, 0.0, 0.0]]), two_skill_profiles)


def test_nearest_vertex_labels_follow_their_centers(rng, linear_profiles):
    """Test that reordering the centers reorders the labels the same way."""
    for _ in range(20):
        centers = rng.random((8, 6))
        labels = nearest_vertex_labels(centers, linear_profiles)
        order = rng.permutation(len(centers))
        shuffled = nearest_vertex_labels(centers[order], linear_profiles)
        assert shuffled == [labels[i] for i in order]


def test_label_collisions():
    """Test that repeated labels are reported once, in first-seen order."""
    labels = [(1, 1), (0, 0), (1, 1), (0, 0), (1, 0)]
    assert label_collisions(labels) == ((1, 1), (0, 0))
    assert label_collisions([(0, 0), (1, 0)]) == ()


def test_label_clustering_nearest_vertex_with_collision(two_skill_profiles):
    """Test fallback labels and collision reporting."""
    result = ClusteringResult(
        assignment=[0, 0, 1, 2],
        centers=[[0.9, 0.9], [0.95, 0.95], [0.0, 0.1]],
        objective=0.0,
        iterations=1,
        method_tag="kmeans",
    )
    labelled = label_clustering(result, two_skill_profiles)
    assert labelled.labels == ((1, 1), (1, 1), (0, 0))
    assert labelled.collisions == ((1, 1),)
    assert labelled.student_profiles().tolist() == [[1, 1], [1, 1], [1, 1], [0, 0]]


def test_label_clustering_keeps_carried_labels(two_skill_profiles):
    """Test that carried labels win over the nearest vertex."""
    result = ClusteringResult(
        assignment=[0, 1],
        centers=[[0.9, 0.9], [0.2, 0.1]],
        objective=0.0,
        iterations=1,
        method_tag="lcvqe",
        labels=((1, 0), None),
    )
    labelled = label_clustering(result, two_skill_profiles)
    assert labelled.labels == ((1, 0), (0, 0))
    assert labelled.collisions == ()


def test_profile_accuracy_examples():
    """Test exact-match accuracy."""
    truth = [(1, 0), (1, 1)]
    assert profile_accuracy([(1, 0), (1, 1)], truth) == 1.0
    assert profile_accuracy([(0, 0), (0, 1)], truth) == 0.0
    assert profile_accuracy([(1, 0), (1, 0)], truth) == 0.5
    with pytest.raises(ValueError, match="differ"):
        profile_accuracy([(1, 0)], truth)
