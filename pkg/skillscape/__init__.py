"""Skillscape - cluster simulated students into skill profiles under skill hierarchies."""

__version__ = "1.0.0"
__author__ = "Skillscape Team"

from .cli import app
from .models import ClusteringResult, ExperimentConfig, Hierarchy, ProfileSet, ResultRow

__all__ = [
    "ClusteringResult",
    "ExperimentConfig",
    "Hierarchy",
    "ProfileSet",
    "ResultRow",
    "app",
]
