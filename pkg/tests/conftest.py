"""Fixtures and test utilities."""

import numpy as np
import pytest

from skillscape.core.hierarchy import build_canonical_hierarchy, enumerate_profiles
from skillscape.core.response_sim import sample_q_matrix
from skillscape.models import ExperimentConfig, ProfileSet, QMatrix, ResultRow


@pytest.fixture
def rng():
    """Create a seeded random stream for testing."""
    return np.random.default_rng(12345)


@pytest.fixture
def linear_hierarchy():
    """Six-skill chain 1 -> 2 -> ... -> 6."""
    return build_canonical_hierarchy("linear", 6)


@pytest.fixture
def convergent_hierarchy():
    """Six-skill convergent hierarchy with an OR-term at skill 5."""
    return build_canonical_hierarchy("convergent", 6)


@pytest.fixture
def linear_profiles(linear_hierarchy):
    """The 7 profiles of the six-skill chain."""
    return enumerate_profiles(linear_hierarchy)


@pytest.fixture
def two_skill_profiles():
    """Licit set {00, 10, 11} of a two-skill chain."""
    return ProfileSet(profiles=[(0, 0), (1, 0), (1, 1)])


@pytest.fixture
def small_q_matrix():
    """Q-matrix with item skill sets {1}, {1,2}, {2}."""
    return QMatrix(entries=[[1, 0], [1, 1], [0, 1]])


@pytest.fixture
def default_q_matrix():
    """A 30-item, 6-skill Q-matrix drawn with the default mix."""
    return sample_q_matrix(30, 6, [(1, 9), (2, 18), (3, 3)], np.random.default_rng(7))


@pytest.fixture
def small_config():
    """Create a small experiment config for testing."""
    return ExperimentConfig(
        N=60,
        hierarchies=["linear"],
        generating_models=["DINA"],
        methods=["hc", "kmeans", "emptyk_pseudo_dina"],
        subset_sizes=[3],
        replications=2,
        pseudo_M=20,
        seed=7,
    )


@pytest.fixture
def sample_rows():
    """Create result rows over two models and two hierarchies."""
    rows = []
    for model in ("DINA", "NIDA"):
        for hierarchy, num_profiles in (("linear", 7), ("convergent", 12)):
            for method, base in (("hc", 0.4), ("emptyk_pseudo_dina", 0.9)):
                for size in (3, 4):
                    for rep in range(2):
                        rows.append(
                            ResultRow(
                                hierarchy=hierarchy,
                                generating_model=model,
                                method=method,
                                L_h=num_profiles,
                                subset_size=size,
                                proportion=size / num_profiles,
                                replication=rep,
                                ARI=base - 0.1 * rep,
                                clusters_found=size,
                                profile_accuracy=0.5,
                                flags=[],
                            )
                        )
    return rows
