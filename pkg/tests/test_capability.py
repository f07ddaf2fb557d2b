"""Tests for sum scores and capability scores."""

import numpy as np
import pytest

from skillscape.core.capability import (
    capability_from_responses,
    capability_scores,
    profile_vertex,
    sum_scores,
)
from skillscape.core.response_sim import simulate_responses, zero_noise_params

pytestmark = pytest.mark.unit


def test_sum_scores_examples(small_q_matrix):
    """Test W = YQ on the three-item, two-skill example."""
    responses = np.array([[1, 0, 1], [1, 1, 1], [0, 0, 0]])
    assert sum_scores(responses, small_q_matrix).tolist() == [[1, 1], [2, 2], [0, 0]]


def test_sum_scores_shape_mismatch(small_q_matrix):
    """Test that responses must have one column per item."""
    with pytest.raises(ValueError, match="expected N x 3 items"):
        sum_scores(np.zeros((2, 4)), small_q_matrix)


def test_capability_scores_examples(small_q_matrix):
    """Test division by the number of items per skill."""
    scores = capability_scores(np.array([[1, 1], [2, 2]]), small_q_matrix)
    assert scores.tolist() == [[0.5, 0.5], [1.0, 1.0]]


def test_capability_scores_undefined_skill():
    """Test rejection when a skill has no items."""
    q = np.array([[1, 0], [1, 0]])
    with pytest.raises(ValueError, match="no item requires skill"):
        capability_scores(np.array([[1, 0]]), q)


def test_capability_matches_brute_force(rng):
    """Test B = W / n_k against an explicit loop on random instances."""
    for _ in range(20):
        items, skills = int(rng.integers(2, 8)), int(rng.integers(1, 4))
        q = rng.integers(0, 2, size=(items, skills))
        q[0, :] = 1
        responses = rng.integers(0, 2, size=(5, items))

        scores = capability_from_responses(responses, q)
        for i in range(5):
            for k in range(skills):
                required = [j for j in range(items) if q[j, k]]
                expected = sum(responses[i, j] for j in required) / len(required)
                assert scores[i, k] == pytest.approx(expected)
        assert np.all((scores >= 0) & (scores <= 1))


def test_capability_monotone_in_responses(default_q_matrix, rng):
    """Test that flipping a wrong answer to right never lowers a score."""
    responses = rng.integers(0, 2, size=(1, 30))
    before = capability_from_responses(responses, default_q_matrix)
    wrong = np.flatnonzero(responses[0] == 0)
    item = int(wrong[0])
    responses[0, item] = 1
    after = capability_from_responses(responses, default_q_matrix)

    required = default_q_matrix.as_array()[item] == 1
    assert np.all(after >= before)
    assert np.all(after[0, required] > before[0, required])


def test_zero_noise_full_mastery_is_upper_vertex(default_q_matrix, rng):
    """Test that a noise-free master lands on the all-ones corner."""
    params = zero_noise_params("DINA", default_q_matrix)
    responses = simulate_responses([(1,) * 6], default_q_matrix, params, rng)
    assert capability_from_responses(responses, default_q_matrix).tolist() == [[1.0] * 6]


def test_profile_vertex():
    """Test the embedding of profiles as hypercube corners."""
    assert profile_vertex((0, 0, 0)).tolist() == [0.0, 0.0, 0.0]
    assert profile_vertex((1, 1)).tolist() == [1.0, 1.0]
    assert profile_vertex((1, 0, 1)).tolist() == [1.0, 0.0, 1.0]
