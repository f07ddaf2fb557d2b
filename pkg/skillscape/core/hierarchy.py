"""Skill hierarchies and the mastery profiles they admit."""

import itertools
import json
from pathlib import Path
from typing import Literal

import numpy as np

from ..models import (
    CANONICAL_HIERARCHIES,
    Hierarchy,
    Profile,
    ProfileSet,
    canonical_key,
)

MAX_ENUMERATION_SKILLS = 20

# 1-based requirement lists for the six-skill shapes.
_SIX_SKILL_SHAPES: dict[str, dict[int, list[list[int]]]] = {
    "convergent": {2: [[1]], 3: [[2]], 4: [[2]], 5: [[3, 4]], 6: [[5]]},
    "divergent": {2: [[1]], 3: [[2]], 4: [[1]], 5: [[4]], 6: [[4]]},
    "unstructured": {2: [[1]], 3: [[1]], 4: [[1]], 5: [[1]], 6: [[1]]},
}

SUPPORTED_SHAPES = (
    "linear (any K >= 1), null (any K >= 1), "
    "convergent / divergent / unstructured (K = 6 only)"
)


def build_canonical_hierarchy(kind: str, num_skills: int) -> Hierarchy:
    """Build one of the named hierarchy shapes.

    Args:
        kind: One of linear, convergent, divergent, unstructured, null
        num_skills: Number of skills K

    Returns:
        Hierarchy named after ``kind``

    Raises:
        ValueError: If the (kind, K) combination is not supported
    """
    if kind not in CANONICAL_HIERARCHIES or num_skills < 1:
        raise ValueError(
            f"Unsupported hierarchy ({kind}, K={num_skills}). "
            f"Supported shapes: {SUPPORTED_SHAPES}"
        )

    if kind == "linear":
        requirements = [[]] + [[[k - 1]] for k in range(1, num_skills)]
        return Hierarchy(num_skills=num_skills, requirements=requirements, name=kind)

    if kind == "null":
        return Hierarchy(
            num_skills=num_skills, requirements=[[]] * num_skills, name=kind
        )

    if num_skills != 6:
        raise ValueError(
            f"Unsupported hierarchy ({kind}, K={num_skills}). "
            f"Supported shapes: {SUPPORTED_SHAPES}"
        )

    return Hierarchy.from_config(
        {"skills": 6, "requirements": _SIX_SKILL_SHAPES[kind]}, name=kind
    )


def load_hierarchy(name_or_path: str, num_skills: int) -> Hierarchy:
    """Resolve a canonical hierarchy name or a JSON hierarchy file.

    Raises:
        FileNotFoundError: If the argument is neither a known name nor a file
    """
    if name_or_path in CANONICAL_HIERARCHIES:
        return build_canonical_hierarchy(name_or_path, num_skills)

    path = Path(name_or_path)
    if not path.exists():
        raise FileNotFoundError(
            f"Hierarchy file not found: {name_or_path} "
            f"(known names: {', '.join(CANONICAL_HIERARCHIES)})"
        )
    with open(path, encoding="utf-8") as f:
        data = json.load(f)
    return Hierarchy.from_config(data, name=data.get("name") or path.stem)


def is_consistent(profile: Profile, hierarchy: Hierarchy) -> bool:
    """Check a profile against every prerequisite term of its mastered skills.

    Raises:
        ValueError: If the profile length differs from the number of skills
    """
    if len(profile) != hierarchy.num_skills:
        raise ValueError(
            f"Profile has {len(profile)} skills, hierarchy has {hierarchy.num_skills}"
        )

    for skill, mastered in enumerate(profile):
        if not mastered:
            continue
        for term in hierarchy.requirements[skill]:
            if not any(profile[parent] for parent in term):
                return False
    return True


def enumerate_profiles(hierarchy: Hierarchy) -> ProfileSet:
    """All profiles consistent with ``hierarchy``, in canonical order.

    Brute force over the 2^K candidate vectors.

    Raises:
        ValueError: If K exceeds MAX_ENUMERATION_SKILLS
    """
    if hierarchy.num_skills > MAX_ENUMERATION_SKILLS:
        raise ValueError(
            f"Cannot enumerate {hierarchy.num_skills} skills; "
            f"the limit is {MAX_ENUMERATION_SKILLS}"
        )

    consistent = [
        candidate
        for candidate in itertools.product((0, 1), repeat=hierarchy.num_skills)
        if is_consistent(candidate, hierarchy)
    ]
    return ProfileSet(profiles=sorted(consistent, key=canonical_key))


def select_subset(
    profile_set: ProfileSet,
    size: int,
    mode: Literal["prefix", "random"],
    rng: np.random.Generator,
) -> ProfileSet:
    """Pick ``size`` profiles, either the canonical prefix or a random sample.

    Random samples are drawn without replacement and returned in canonical
    order.

    Raises:
        ValueError: If ``size`` is outside 3..|profile_set| or the mode is unknown
    """
    if not 3 <= size <= len(profile_set):
        raise ValueError(
            f"Subset size {size} outside 3..{len(profile_set)} for this profile set"
        )
    if mode not in ("prefix", "random"):
        raise ValueError(f"Unknown subset mode '{mode}'. Available: prefix, random")

    ordered = profile_set.canonical()
    if size == len(ordered):
        return ordered

    if mode == "prefix":
        return ProfileSet(profiles=ordered.profiles[:size])

    chosen = np.sort(rng.choice(len(ordered), size=size, replace=False))
    return ProfileSet(profiles=[ordered[int(i)] for i in chosen])
