"""Tests for constraint derivation, LCVQE and semisupervised clustering."""

import numpy as np
import pytest

from skillscape.core.clustering import (
    centers_random,
    kmeans_from_centers,
    simulate_pseudodata,
)
from skillscape.core.evaluation import label_clustering
from skillscape.core.response_sim import zero_noise_params
from skillscape.core.semisupervised import (
    derive_constraints,
    lcvqe,
    semisupervised_clustering,
)
from skillscape.models import CenterSet, ConstraintSet, QMatrix

pytestmark = pytest.mark.unit


def test_derive_constraints_counts(linear_profiles):
    """Test chained must-links within groups and one cannot-link per group pair."""
    per_profile = 4
    labels = [p for p in linear_profiles.profiles for _ in range(per_profile)]
    labels += [None] * 5

    constraints = derive_constraints(labels)
    num_profiles = len(linear_profiles)
    assert len(constraints.must_link) == num_profiles * (per_profile - 1)
    assert len(constraints.cannot_link) == num_profiles * (num_profiles - 1) // 2
    assert constraints.max_index < num_profiles * per_profile


def test_derive_constraints_example():
    """Test the exact pairs for a small label list."""
    constraints = derive_constraints([(0, 0), (1, 0), (0, 0), None, (1, 0)])
    assert constraints.must_link == ((0, 2), (1, 4))
    assert constraints.cannot_link == ((0, 1),)


def test_derive_constraints_needs_labels():
    """Test that an all-unlabelled list is rejected."""
    with pytest.raises(ValueError, match="at least one labelled point"):
        derive_constraints([None, None])


def test_lcvqe_without_constraints_matches_kmeans():
    """Test that LCVQE with no constraints is plain Lloyd from the same centers."""
    rng = np.random.default_rng(2718)
    for _ in range(50):
        n = int(rng.integers(5, 40))
        points = rng.random((n, 3))
        init = centers_random(points, int(rng.integers(1, 5)), rng)

        expected = kmeans_from_centers(points, init)
        result = lcvqe(points, ConstraintSet(), init, [None] * n)

        assert np.array_equal(result.assignment, expected.assignment)
        assert np.allclose(result.centers, expected.centers)
        assert result.objective == pytest.approx(expected.objective)


def test_lcvqe_must_link_keeps_pair_together():
    """Test that a must-linked pair straddling two centers ends up together."""
    points = np.array([[0.0], [0.1], [1.0], [1.1]])
    init = CenterSet(centers=[[0.0], [1.1]])
    result = lcvqe(points, ConstraintSet(must_link=[(1, 2)]), init, [None] * 4)
    assert result.assignment[1] == result.assignment[2]


def test_lcvqe_cannot_link_separates_pair():
    """Test that a cannot-linked pair sharing a center is split."""
    points = np.array([[0.0], [0.1], [5.0]])
    init = CenterSet(centers=[[0.0], [5.0]])
    result = lcvqe(points, ConstraintSet(cannot_link=[(0, 1)]), init, [None] * 3)
    assert result.assignment[0] != result.assignment[1]


def test_lcvqe_discards_pseudo_only_cluster():
    """Test that a cluster holding only pseudodata is dropped from the result."""
    pseudo = [[0.0, 0.0], [0.0, 0.0], [1.0, 1.0], [1.0, 1.0], [1.0, 0.0], [1.0, 0.0]]
    real = [[0.05, 0.0], [0.0, 0.05], [1.0, 0.95], [0.95, 1.0]]
    labels = [(0, 0), (0, 0), (1, 1), (1, 1), (1, 0), (1, 0)] + [None] * 4
    init = CenterSet(
        centers=[[0.0, 0.0], [1.0, 1.0], [1.0, 0.0]],
        labels=((0, 0), (1, 1), (1, 0)),
    )

    result = lcvqe(pseudo + real, derive_constraints(labels), init, labels)
    assert result.num_clusters == 2
    assert result.assignment.tolist() == [0, 0, 1, 1]
    assert result.labels == ((0, 0), (1, 1))
    assert result.method_tag == "lcvqe"


def test_lcvqe_input_validation():
    """Test label count, real point, index and k checks."""
    init = CenterSet(centers=[[0.0], [1.0]])
    points = [[0.0], [1.0]]
    with pytest.raises(ValueError, match="Got 1 labels for 2 points"):
        lcvqe(points, ConstraintSet(), init, [None])
    with pytest.raises(ValueError, match="at least one real"):
        lcvqe(points, ConstraintSet(), init, [(0,), (1,)])
    with pytest.raises(ValueError, match="outside the 2 points"):
        lcvqe(points, ConstraintSet(must_link=[(0, 5)]), init, [None, None])
    with pytest.raises(ValueError, match="does not match 2 starting centers"):
        lcvqe(points, ConstraintSet(), init, [None, None], k=3)


def test_semisupervised_with_duplicated_labelled_points(linear_profiles):
    """Test recovery when every pseudo point of a profile is the same vertex."""
    q_matrix = QMatrix(entries=np.eye(6, dtype=int).tolist())
    params = zero_noise_params("DINA", q_matrix)
    pseudo = simulate_pseudodata(
        linear_profiles,
        q_matrix,
        "DINA",
        np.random.default_rng(0),
        per_profile=3,
        params=params,
    )
    truth = np.repeat(linear_profiles.as_array(), 5, axis=0)
    points = truth.astype(float)

    result = semisupervised_clustering(points, pseudo, linear_profiles)
    assert result.num_clusters == len(linear_profiles)
    assert len(result.assignment) == len(points)

    labelled = label_clustering(result, linear_profiles)
    assert np.array_equal(labelled.student_profiles(), truth)
    assert labelled.collisions == ()
