"""Pydantic data models for Skillscape."""

import hashlib
import json
import math
from graphlib import CycleError, TopologicalSorter
from typing import Any, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# A mastery vector: one 0/1 entry per skill, skill 1 first.
Profile = tuple[int, ...]

GeneratingModel = Literal["DINA", "NIDA"]

MethodName = Literal[
    "hc",
    "kmeans",
    "emptyk_random",
    "emptyk_rescaled",
    "emptyk_pseudo_dina",
    "emptyk_pseudo_nida",
    "semisup_dina",
    "semisup_nida",
]

ALL_METHODS: tuple[str, ...] = (
    "hc",
    "kmeans",
    "emptyk_random",
    "emptyk_rescaled",
    "emptyk_pseudo_dina",
    "emptyk_pseudo_nida",
    "semisup_dina",
    "semisup_nida",
)

CANONICAL_HIERARCHIES: tuple[str, ...] = (
    "linear",
    "convergent",
    "divergent",
    "unstructured",
    "null",
)


def canonical_key(profile: Profile) -> tuple[int, int]:
    """Sort key for canonical profile order.

    Profiles with fewer mastered skills come first; within a mastery count
    the larger bit string (skill 1 most significant) comes first.
    """
    value = int("".join(str(bit) for bit in profile), 2) if profile else 0
    return (sum(profile), -value)


def profile_to_string(profile: Profile) -> str:
    """Render a profile as its bit string, e.g. ``(1, 1, 0) -> "110"``."""
    return "".join(str(int(bit)) for bit in profile)


def profile_from_string(bits: str) -> Profile:
    """Parse a bit string back into a profile."""
    bits = bits.strip()
    if not bits or any(ch not in "01" for ch in bits):
        raise ValueError(f"Invalid profile bit string: {bits!r}")
    return tuple(int(ch) for ch in bits)


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


class Hierarchy(BaseModel):
    """Prerequisite DAG over ``num_skills`` skills.

    ``requirements[k]`` holds the prerequisite terms of skill ``k`` (0-based).
    Skill ``k`` can be mastered only if every term contains at least one
    mastered parent: AND over terms, OR within a term.
    """

    model_config = ConfigDict(frozen=True)

    num_skills: int = Field(gt=0)
    requirements: tuple[tuple[tuple[int, ...], ...], ...]
    name: Optional[str] = None

    @field_validator("requirements", mode="before")
    @classmethod
    def _normalize_terms(cls, value: Any) -> Any:
        return tuple(
            tuple(tuple(sorted(set(term))) for term in terms) for terms in value
        )

    @model_validator(mode="after")
    def _check_dag(self) -> "Hierarchy":
        if len(self.requirements) != self.num_skills:
            raise ValueError(
                f"Expected requirements for {self.num_skills} skills, "
                f"got {len(self.requirements)}"
            )

        for skill, terms in enumerate(self.requirements):
            for term in terms:
                if not term:
                    raise ValueError(f"Skill {skill + 1} has an empty prerequisite term")
                for parent in term:
                    if not 0 <= parent < self.num_skills:
                        raise ValueError(
                            f"Skill {skill + 1} lists parent {parent + 1}, "
                            f"outside 1..{self.num_skills}"
                        )
                    if parent == skill:
                        raise ValueError(f"Skill {skill + 1} lists itself as a parent")

        graph = {skill: self.parents(skill) for skill in range(self.num_skills)}
        try:
            tuple(TopologicalSorter(graph).static_order())
        except CycleError as e:
            cycle = " -> ".join(str(node + 1) for node in e.args[1])
            raise ValueError(f"Prerequisite graph has a cycle: {cycle}") from e

        return self

    def parents(self, skill: int) -> set[int]:
        """All skills appearing in any term of ``skill``."""
        return {parent for term in self.requirements[skill] for parent in term}

    @property
    def label(self) -> str:
        """Stable display name; explicit hierarchies get a digest-based name."""
        if self.name:
            return self.name
        payload = json.dumps(self.to_config(), sort_keys=True)
        return f"custom-{hashlib.sha256(payload.encode()).hexdigest()[:8]}"

    @classmethod
    def from_config(
        cls, data: dict[str, Any], name: Optional[str] = None
    ) -> "Hierarchy":
        """Build from the 1-based JSON form.

        Example: ``{"skills": 6, "requirements": {"5": [[3, 4]]}}``.
        """
        if "skills" not in data:
            raise ValueError("Hierarchy config needs a 'skills' entry")
        num_skills = int(data["skills"])
        raw = data.get("requirements", {}) or {}

        requirements: list[list[list[int]]] = [[] for _ in range(num_skills)]
        for skill_key, terms in raw.items():
            skill = int(skill_key) - 1
            if not 0 <= skill < num_skills:
                raise ValueError(f"Requirement for unknown skill {skill_key}")
            requirements[skill] = [[int(p) - 1 for p in term] for term in terms]

        return cls(
            num_skills=num_skills,
            requirements=requirements,
            name=name or data.get("name"),
        )

    def to_config(self) -> dict[str, Any]:
        """Inverse of :meth:`from_config` (1-based, empty skills omitted)."""
        return {
            "skills": self.num_skills,
            "requirements": {
                str(skill + 1): [[p + 1 for p in term] for term in terms]
                for skill, terms in enumerate(self.requirements)
                if terms
            },
        }


class ProfileSet(BaseModel):
    """Ordered collection of distinct profiles of equal length."""

    model_config = ConfigDict(frozen=True)

    profiles: tuple[Profile, ...]
    order_tag: Literal["canonical", "custom"] = "canonical"

    @field_validator("profiles", mode="before")
    @classmethod
    def _coerce(cls, value: Any) -> Any:
        return tuple(tuple(int(bit) for bit in profile) for profile in value)

    @model_validator(mode="after")
    def _check_profiles(self) -> "ProfileSet":
        if not self.profiles:
            raise ValueError("A profile set needs at least one profile")

        width = len(self.profiles[0])
        for profile in self.profiles:
            if len(profile) != width:
                raise ValueError("All profiles must have the same number of skills")
            if any(bit not in (0, 1) for bit in profile):
                raise ValueError(f"Profile entries must be 0 or 1: {profile}")

        if len(set(self.profiles)) != len(self.profiles):
            raise ValueError("Profile set contains duplicate profiles")

        if self.order_tag == "canonical" and list(self.profiles) != sorted(
            self.profiles, key=canonical_key
        ):
            raise ValueError("Profiles tagged canonical are not in canonical order")

        return self

    def __len__(self) -> int:
        return len(self.profiles)

    def __getitem__(self, index: int) -> Profile:
        return self.profiles[index]

    @property
    def num_skills(self) -> int:
        return len(self.profiles[0])

    def as_array(self) -> np.ndarray:
        """The profiles as an ``L x K`` integer array."""
        return np.array(self.profiles, dtype=int).reshape(len(self), self.num_skills)

    def canonical(self) -> "ProfileSet":
        """This set re-sorted into canonical order."""
        if self.order_tag == "canonical":
            return self
        return ProfileSet(profiles=sorted(self.profiles, key=canonical_key))


class QMatrix(BaseModel):
    """Binary item-by-skill requirement matrix."""

    model_config = ConfigDict(frozen=True)

    entries: tuple[tuple[int, ...], ...]

    @field_validator("entries", mode="before")
    @classmethod
    def _coerce(cls, value: Any) -> Any:
        return tuple(tuple(int(cell) for cell in row) for row in np.asarray(value))

    @model_validator(mode="after")
    def _check_entries(self) -> "QMatrix":
        if not self.entries or not self.entries[0]:
            raise ValueError("Q-matrix must have at least one item and one skill")

        width = len(self.entries[0])
        for j, row in enumerate(self.entries):
            if len(row) != width:
                raise ValueError("Q-matrix rows must all have the same length")
            if any(cell not in (0, 1) for cell in row):
                raise ValueError(f"Q-matrix row {j + 1} has a non-binary entry")
            if sum(row) == 0:
                raise ValueError(f"Item {j + 1} requires no skill")

        for k in range(width):
            if not any(row[k] for row in self.entries):
                raise ValueError(f"Skill {k + 1} is not required by any item")

        return self

    @property
    def num_items(self) -> int:
        return len(self.entries)

    @property
    def num_skills(self) -> int:
        return len(self.entries[0])

    def as_array(self) -> np.ndarray:
        return np.array(self.entries, dtype=int)

    def skill_counts(self) -> np.ndarray:
        """Number of items requiring each skill (``n_k``)."""
        return self.as_array().sum(axis=0)


class _SlipGuessParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    slip: tuple[float, ...]
    guess: tuple[float, ...]

    @model_validator(mode="after")
    def _check_ranges(self) -> "_SlipGuessParams":
        if len(self.slip) != len(self.guess):
            raise ValueError("Slip and guess vectors must have the same length")
        for index, (s, g) in enumerate(zip(self.slip, self.guess)):
            if not (0.0 <= s < 1.0 and 0.0 <= g < 1.0):
                raise ValueError(f"Slip/guess at position {index + 1} outside [0, 1)")
            if s + g >= 1.0:
                raise ValueError(
                    f"Slip + guess at position {index + 1} is {s + g:.3f}; must be < 1"
                )
        return self

    def __len__(self) -> int:
        return len(self.slip)

    @classmethod
    def zero(cls, size: int):
        """Noise-free parameters: no slips and no guesses."""
        return cls(slip=(0.0,) * size, guess=(0.0,) * size)


class DinaParams(_SlipGuessParams):
    """Per-item slip and guess parameters."""

    model: Literal["DINA"] = "DINA"


class NidaParams(_SlipGuessParams):
    """Per-skill slip and guess parameters."""

    model: Literal["NIDA"] = "NIDA"


ModelParams = Union[DinaParams, NidaParams]


class Dendrogram(BaseModel):
    """Agglomerative merge history; leaves are 1..N, merged clusters N+1...."""

    model_config = ConfigDict(frozen=True)

    num_leaves: int = Field(gt=0)
    merges: tuple[tuple[int, int, float], ...]

    @model_validator(mode="after")
    def _check_merges(self) -> "Dendrogram":
        if len(self.merges) != self.num_leaves - 1:
            raise ValueError(
                f"A dendrogram over {self.num_leaves} leaves needs "
                f"{self.num_leaves - 1} merges, got {len(self.merges)}"
            )

        available = set(range(1, self.num_leaves + 1))
        previous = 0.0
        for step, (a, b, height) in enumerate(self.merges):
            if a not in available or b not in available or a == b:
                raise ValueError(f"Merge {step + 1} joins unavailable clusters {a}, {b}")
            if height < 0 or height < previous:
                raise ValueError(
                    f"Merge heights must be non-decreasing; step {step + 1} "
                    f"has {height} after {previous}"
                )
            available -= {a, b}
            available.add(self.num_leaves + step + 1)
            previous = height

        return self

    @property
    def heights(self) -> list[float]:
        return [height for _, _, height in self.merges]


class CenterSet(BaseModel):
    """Starting centers, optionally labelled with the profile they stand for."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    centers: np.ndarray
    labels: Optional[tuple[Profile, ...]] = None

    @field_validator("centers", mode="before")
    @classmethod
    def _coerce_centers(cls, value: Any) -> np.ndarray:
        array = np.array(value, dtype=float, ndmin=2)
        return _readonly(array)

    @model_validator(mode="after")
    def _check_centers(self) -> "CenterSet":
        if self.centers.ndim != 2 or self.centers.shape[0] == 0:
            raise ValueError("A center set needs at least one center")
        if not np.all(np.isfinite(self.centers)):
            raise ValueError("Center coordinates must be finite")
        if self.labels is not None and len(self.labels) != len(self.centers):
            raise ValueError("Need exactly one label per center")
        return self

    def __len__(self) -> int:
        return int(self.centers.shape[0])


class ClusteringResult(BaseModel):
    """Partition of the clustered points plus the centers that produced it."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    assignment: np.ndarray
    centers: np.ndarray
    objective: float
    iterations: int = Field(ge=0)
    method_tag: str
    labels: Optional[tuple[Optional[Profile], ...]] = None
    objective_trace: tuple[float, ...] = ()

    @field_validator("assignment", mode="before")
    @classmethod
    def _coerce_assignment(cls, value: Any) -> np.ndarray:
        return _readonly(np.array(value, dtype=int).reshape(-1))

    @field_validator("centers", mode="before")
    @classmethod
    def _coerce_centers(cls, value: Any) -> np.ndarray:
        return _readonly(np.array(value, dtype=float, ndmin=2))

    @model_validator(mode="after")
    def _check_result(self) -> "ClusteringResult":
        if self.assignment.size and (
            self.assignment.min() < 0 or self.assignment.max() >= len(self.centers)
        ):
            raise ValueError("Every assigned cluster index needs a center")
        if not math.isfinite(self.objective) or self.objective < 0:
            raise ValueError(f"Objective must be finite and nonnegative: {self.objective}")
        if self.labels is not None and len(self.labels) != len(self.centers):
            raise ValueError("Need exactly one label slot per cluster")
        return self

    @property
    def num_clusters(self) -> int:
        return int(self.centers.shape[0])


class ConstraintSet(BaseModel):
    """Pairwise must-link and cannot-link constraints over point indices."""

    model_config = ConfigDict(frozen=True)

    must_link: tuple[tuple[int, int], ...] = ()
    cannot_link: tuple[tuple[int, int], ...] = ()

    @field_validator("must_link", "cannot_link", mode="before")
    @classmethod
    def _normalize_pairs(cls, value: Any) -> Any:
        seen: dict[tuple[int, int], None] = {}
        for a, b in value:
            seen[(min(int(a), int(b)), max(int(a), int(b)))] = None
        return tuple(seen)

    @model_validator(mode="after")
    def _check_pairs(self) -> "ConstraintSet":
        for a, b in self.must_link + self.cannot_link:
            if a == b:
                raise ValueError(f"Constraint pair ({a}, {b}) repeats an index")
            if a < 0:
                raise ValueError(f"Constraint pair ({a}, {b}) has a negative index")
        overlap = set(self.must_link) & set(self.cannot_link)
        if overlap:
            raise ValueError(f"Pairs both must-link and cannot-link: {sorted(overlap)}")
        return self

    @property
    def is_empty(self) -> bool:
        return not self.must_link and not self.cannot_link

    @property
    def max_index(self) -> int:
        pairs = self.must_link + self.cannot_link
        return max((b for _, b in pairs), default=-1)


class LabeledClustering(BaseModel):
    """A clustering result with one profile label per cluster."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    result: ClusteringResult
    labels: tuple[Profile, ...]
    collisions: tuple[Profile, ...] = ()

    @model_validator(mode="after")
    def _check_labels(self) -> "LabeledClustering":
        if len(self.labels) != self.result.num_clusters:
            raise ValueError("Every cluster needs exactly one label")
        return self

    def student_profiles(self) -> np.ndarray:
        """Assigned profile for every clustered point, as an ``N x K`` array."""
        return np.array(self.labels, dtype=int)[self.result.assignment]


class PseudoData(BaseModel):
    """Simulated capability scores with the profile each point was drawn from."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    points: np.ndarray
    labels: tuple[Profile, ...]
    model: GeneratingModel

    @model_validator(mode="after")
    def _check_lengths(self) -> "PseudoData":
        if len(self.labels) != len(self.points):
            raise ValueError("Need one profile label per pseudo point")
        return self


class HierarchySpec(BaseModel):
    """Explicit hierarchy as written in an experiment config (1-based)."""

    name: Optional[str] = None
    skills: int = Field(gt=0)
    requirements: dict[str, list[list[int]]] = {}

    def to_hierarchy(self) -> Hierarchy:
        return Hierarchy.from_config(self.model_dump(), name=self.name)


class ExperimentConfig(BaseModel):
    """Settings for one simulation grid."""

    K: int = Field(default=6, gt=0)
    J: int = Field(default=30, gt=0)
    N: int = Field(default=250, gt=1)
    hierarchies: list[Union[str, HierarchySpec]] = list(CANONICAL_HIERARCHIES)
    generating_models: list[GeneratingModel] = ["DINA", "NIDA"]
    methods: list[MethodName] = list(ALL_METHODS)
    subset_sizes: Union[Literal["all"], list[int]] = "all"
    replications: int = Field(default=25, gt=0)
    pseudo_M: int = Field(default=100, gt=0)
    q_mix: list[tuple[int, int]] = [(1, 9), (2, 18), (3, 3)]
    resample_q_per_replication: bool = False
    seed: int = Field(ge=0)

    slip_max: float = 0.30
    guess_max: float = 0.15
    zero_noise: bool = False
    kmeans_restarts: int = Field(default=5, gt=0)
    max_iter: int = Field(default=300, gt=0)
    q_max_retries: int = Field(default=1000, gt=0)
    workers: int = Field(default=1, gt=0)
    record_timings: bool = False

    @field_validator("hierarchies")
    @classmethod
    def _known_hierarchies(cls, value: list) -> list:
        if not value:
            raise ValueError("At least one hierarchy is required")
        for entry in value:
            if isinstance(entry, str) and entry not in CANONICAL_HIERARCHIES:
                raise ValueError(
                    f"Unknown hierarchy '{entry}'. "
                    f"Available: {list(CANONICAL_HIERARCHIES)}"
                )
        return value

    @field_validator("generating_models", "methods")
    @classmethod
    def _nonempty_unique(cls, value: list) -> list:
        if not value:
            raise ValueError("Must name at least one entry")
        if len(set(value)) != len(value):
            raise ValueError(f"Duplicate entries in {value}")
        return value

    @field_validator("subset_sizes")
    @classmethod
    def _sizes_at_least_three(cls, value: Any) -> Any:
        if value != "all":
            if not value:
                raise ValueError("subset_sizes must be 'all' or a nonempty list")
            if any(size < 3 for size in value):
                raise ValueError(f"Subset sizes must be at least 3: {value}")
        return value

    @model_validator(mode="after")
    def _check_consistency(self) -> "ExperimentConfig":
        total = sum(count for _, count in self.q_mix)
        if total != self.J:
            raise ValueError(f"q_mix item counts sum to {total}, expected J={self.J}")
        for skills_per_item, count in self.q_mix:
            if not 1 <= skills_per_item <= self.K or count < 0:
                raise ValueError(
                    f"q_mix entry ({skills_per_item}, {count}) is invalid for K={self.K}"
                )
        if self.slip_max <= 0 or self.guess_max <= 0:
            raise ValueError("slip_max and guess_max must be positive")
        if self.slip_max + self.guess_max >= 1:
            raise ValueError("slip_max + guess_max must be below 1")
        return self


class ResultRow(BaseModel):
    """One method's outcome on one grid cell."""

    hierarchy: str
    generating_model: GeneratingModel
    method: str
    L_h: int = Field(gt=0)
    subset_size: int = Field(gt=0)
    proportion: float = Field(gt=0.0, le=1.0)
    replication: int = Field(ge=0)
    ARI: Optional[float] = Field(default=None, ge=-1.0 - 1e-9, le=1.0 + 1e-9)
    clusters_found: Optional[int] = Field(default=None, ge=1)
    profile_accuracy: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    runtime_ms: Optional[float] = None
    flags: list[str] = []

    @property
    def failed(self) -> bool:
        return any(flag.startswith("error:") for flag in self.flags)


RESULT_COLUMNS: tuple[str, ...] = tuple(ResultRow.model_fields)


class SkippedCell(BaseModel):
    """A grid cell that could not be run, with the reason."""

    hierarchy: str
    generating_model: str
    subset_size: int
    reason: str


class RunMetadata(BaseModel):
    """Contents of ``run_meta.json``."""

    version: str
    master_seed: int
    config: dict[str, Any]
    q_policy: Literal["shared", "per_replication"]
    q_matrices: dict[str, list[list[int]]] = {}
    skipped_cells: list[SkippedCell] = []
    flag_counts: dict[str, int] = {}
    total_rows: int = 0
    error_rows: int = 0
    conventions: dict[str, str] = {}
