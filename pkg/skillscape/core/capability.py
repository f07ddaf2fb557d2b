"""Sum scores and capability scores."""

from typing import Union

import numpy as np

from ..models import Profile, QMatrix

QLike = Union[QMatrix, np.ndarray]


def _q_array(q_matrix: QLike) -> np.ndarray:
    if isinstance(q_matrix, QMatrix):
        return q_matrix.as_array()
    q = np.asarray(q_matrix, dtype=int)
    if q.ndim != 2:
        raise ValueError(f"Q-matrix must be two-dimensional, got shape {q.shape}")
    return q


def sum_scores(responses: np.ndarray, q_matrix: QLike) -> np.ndarray:
    """W = Y Q: correct answers per student among items requiring each skill.

    Raises:
        ValueError: If the response columns do not match the Q-matrix rows
    """
    y = np.asarray(responses, dtype=int)
    q = _q_array(q_matrix)
    if y.ndim != 2 or y.shape[1] != q.shape[0]:
        raise ValueError(
            f"Responses have shape {y.shape}; expected N x {q.shape[0]} items"
        )
    return y @ q


def capability_scores(scores: np.ndarray, q_matrix: QLike) -> np.ndarray:
    """B_ik = W_ik / n_k, with n_k the number of items requiring skill k.

    Raises:
        ValueError: If some skill is required by no item
    """
    w = np.asarray(scores, dtype=float)
    counts = _q_array(q_matrix).sum(axis=0)
    if w.ndim != 2 or w.shape[1] != counts.size:
        raise ValueError(f"Sum scores have shape {w.shape}; expected N x {counts.size}")
    if np.any(counts == 0):
        missing = [str(k + 1) for k in np.flatnonzero(counts == 0)]
        raise ValueError(
            f"Capability score undefined: no item requires skill(s) {', '.join(missing)}"
        )
    return w / counts


def capability_from_responses(responses: np.ndarray, q_matrix: QLike) -> np.ndarray:
    """Responses straight to capability scores."""
    return capability_scores(sum_scores(responses, q_matrix), q_matrix)


def profile_vertex(profile: Profile) -> np.ndarray:
    """The hypercube corner of a profile."""
    return np.asarray(profile, dtype=float)
