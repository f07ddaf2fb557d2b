"""Q-matrix sampling and DINA / NIDA response simulation."""

import logging
from collections.abc import Sequence
from typing import Union

import numpy as np

from ..models import (
    DinaParams,
    GeneratingModel,
    ModelParams,
    NidaParams,
    Profile,
    ProfileSet,
    QMatrix,
)

logger = logging.getLogger(__name__)

DEFAULT_SLIP_MAX = 0.30
DEFAULT_GUESS_MAX = 0.15
DEFAULT_Q_MIX: tuple[tuple[int, int], ...] = ((1, 9), (2, 18), (3, 3))


def sample_q_matrix(
    num_items: int,
    num_skills: int,
    mix: Sequence[tuple[int, int]],
    rng: np.random.Generator,
    max_retries: int = 1000,
) -> QMatrix:
    """Draw a Q-matrix whose items follow ``mix``.

    Each ``(c, count)`` entry contributes ``count`` items requiring ``c``
    distinct skills chosen uniformly. Draws are repeated until every skill
    is required by at least one item.

    Args:
        num_items: J
        num_skills: K
        mix: Sequence of (skills-per-item, item-count)
        rng: Random stream
        max_retries: Attempts before giving up on skill coverage

    Returns:
        QMatrix with rows in ``mix`` order

    Raises:
        ValueError: If the mix is infeasible or the retry budget runs out
    """
    total = sum(count for _, count in mix)
    if total != num_items:
        raise ValueError(f"Item counts in mix sum to {total}, expected {num_items}")
    for skills_per_item, count in mix:
        if not 1 <= skills_per_item <= num_skills or count < 0:
            raise ValueError(
                f"Mix entry ({skills_per_item}, {count}) is infeasible "
                f"with {num_skills} skills"
            )
    slots = sum(skills_per_item * count for skills_per_item, count in mix)
    if slots < num_skills:
        raise ValueError(
            f"Mix provides {slots} skill slots, cannot cover {num_skills} skills"
        )

    for attempt in range(1, max_retries + 1):
        entries = np.zeros((num_items, num_skills), dtype=int)
        row = 0
        for skills_per_item, count in mix:
            for _ in range(count):
                chosen = rng.choice(num_skills, size=skills_per_item, replace=False)
                entries[row, chosen] = 1
                row += 1
        if entries.sum(axis=0).min() > 0:
            logger.debug("Q-matrix covered all skills after %d draw(s)", attempt)
            return QMatrix(entries=entries)

    raise ValueError(
        f"Could not cover all {num_skills} skills in {max_retries} Q-matrix draws"
    )


def sample_params(
    model: GeneratingModel,
    size: int,
    rng: np.random.Generator,
    slip_max: float = DEFAULT_SLIP_MAX,
    guess_max: float = DEFAULT_GUESS_MAX,
) -> ModelParams:
    """Draw slip ~ U(0, slip_max) and guess ~ U(0, guess_max) independently.

    ``size`` is the number of items (DINA) or skills (NIDA). All slips are
    drawn before all guesses.

    Raises:
        ValueError: On nonpositive bounds or bounds summing to 1 or more
    """
    if slip_max <= 0 or guess_max <= 0:
        raise ValueError(
            f"Slip and guess bounds must be positive (got {slip_max}, {guess_max})"
        )
    if slip_max + guess_max >= 1:
        raise ValueError(
            f"slip_max + guess_max must be below 1 (got {slip_max + guess_max})"
        )
    if size < 1:
        raise ValueError(f"Parameter vector size must be positive, got {size}")

    slip = rng.uniform(0.0, slip_max, size=size)
    guess = rng.uniform(0.0, guess_max, size=size)
    params_class = DinaParams if model == "DINA" else NidaParams
    return params_class(slip=tuple(slip.tolist()), guess=tuple(guess.tolist()))


def zero_noise_params(model: GeneratingModel, q_matrix: QMatrix) -> ModelParams:
    """Slip = guess = 0 for every item (DINA) or skill (NIDA)."""
    if model == "DINA":
        return DinaParams.zero(q_matrix.num_items)
    return NidaParams.zero(q_matrix.num_skills)


def eta(profile: Profile, q_row: Sequence[int]) -> int:
    """1 when the profile masters every skill the item requires, else 0.

    Raises:
        ValueError: On a length mismatch or an item requiring no skill
    """
    if len(profile) != len(q_row):
        raise ValueError(f"Profile has {len(profile)} skills, item row {len(q_row)}")
    if not any(q_row):
        raise ValueError("Item requires no skill")
    return int(all(alpha for alpha, q in zip(profile, q_row) if q))


def _check_params(params: ModelParams, q_matrix: QMatrix) -> None:
    expected = q_matrix.num_items if params.model == "DINA" else q_matrix.num_skills
    if len(params) != expected:
        kind = "items" if params.model == "DINA" else "skills"
        raise ValueError(
            f"{params.model} parameters have length {len(params)}, "
            f"expected one per {kind} ({expected})"
        )


def response_prob(
    params: ModelParams, profile: Profile, item: int, q_matrix: QMatrix
) -> float:
    """P(Y = 1) for one student profile on one item (0-based index)."""
    _check_params(params, q_matrix)
    if not 0 <= item < q_matrix.num_items:
        raise ValueError(f"Item index {item} outside 0..{q_matrix.num_items - 1}")
    if len(profile) != q_matrix.num_skills:
        raise ValueError(
            f"Profile has {len(profile)} skills, Q-matrix has {q_matrix.num_skills}"
        )

    q_row = q_matrix.entries[item]
    if params.model == "DINA":
        if eta(profile, q_row):
            return 1.0 - params.slip[item]
        return params.guess[item]

    prob = 1.0
    for k, required in enumerate(q_row):
        if required:
            prob *= 1.0 - params.slip[k] if profile[k] else params.guess[k]
    return prob


def response_prob_matrix(
    params: ModelParams, profiles: np.ndarray, q_matrix: QMatrix
) -> np.ndarray:
    """Vectorised :func:`response_prob` for an ``N x K`` profile array."""
    _check_params(params, q_matrix)
    alpha = np.asarray(profiles, dtype=int)
    if alpha.ndim != 2 or alpha.shape[1] != q_matrix.num_skills:
        raise ValueError(
            f"Profiles must be an N x {q_matrix.num_skills} array, got {alpha.shape}"
        )

    q = q_matrix.as_array()
    slip = np.asarray(params.slip)
    guess = np.asarray(params.guess)

    if params.model == "DINA":
        mastered = alpha @ q.T == q.sum(axis=1)
        return np.where(mastered, 1.0 - slip, guess)

    per_skill = np.where(alpha == 1, 1.0 - slip, guess)
    factors = np.where(q[np.newaxis, :, :] == 1, per_skill[:, np.newaxis, :], 1.0)
    return factors.prod(axis=2)


def simulate_responses(
    profiles: Union[np.ndarray, Sequence[Profile]],
    q_matrix: QMatrix,
    params: ModelParams,
    rng: np.random.Generator,
) -> np.ndarray:
    """Draw an ``N x J`` binary response matrix, one Bernoulli per cell.

    Raises:
        ValueError: If no profiles are given or they have the wrong length
    """
    alpha = np.asarray(profiles, dtype=int)
    if alpha.size == 0:
        raise ValueError("Cannot simulate responses for zero students")
    alpha = alpha.reshape(len(alpha), -1)

    prob = response_prob_matrix(params, alpha, q_matrix)
    return (rng.random(prob.shape) < prob).astype(int)


def assign_students(
    num_students: int,
    subset: ProfileSet,
    rng: np.random.Generator,
    require_coverage: bool = True,
    max_retries: int = 1000,
) -> np.ndarray:
    """Draw each student's profile uniformly from ``subset``.

    With ``require_coverage`` the draw is repeated until every profile in
    the subset has at least one student.

    Returns:
        ``N x K`` integer array, one profile row per student

    Raises:
        ValueError: If coverage is impossible or the retry budget runs out
    """
    size = len(subset)
    if require_coverage and num_students < size:
        raise ValueError(
            f"Cannot cover {size} profiles with only {num_students} students"
        )
    if num_students < 1:
        raise ValueError("Need at least one student")

    table = subset.as_array()
    for _ in range(max_retries):
        chosen = rng.integers(0, size, size=num_students)
        if not require_coverage or np.unique(chosen).size == size:
            return table[chosen]

    raise ValueError(
        f"Could not place a student in each of {size} profiles "
        f"in {max_retries} draws"
    )
