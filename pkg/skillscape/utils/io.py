"""CSV and JSON reading and writing utilities."""

import json
from collections.abc import Sequence
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd
from pydantic import ValidationError

from ..models import (
    RESULT_COLUMNS,
    ClusteringResult,
    ExperimentConfig,
    Profile,
    QMatrix,
    ResultRow,
    profile_from_string,
    profile_to_string,
)

PathLike = Union[str, Path]

FLAG_SEPARATOR = ";"


def _read_csv(csv_path: PathLike) -> pd.DataFrame:
    try:
        # "null" is a hierarchy name, so only empty cells count as missing.
        return pd.read_csv(csv_path, keep_default_na=False, na_values=[""])
    except FileNotFoundError:
        raise FileNotFoundError(f"CSV file not found: {csv_path}")


def _write_csv(df: pd.DataFrame, csv_path: PathLike) -> None:
    try:
        df.to_csv(csv_path, index=False, float_format="%.6f", lineterminator="\n")
    except OSError as e:
        raise OSError(f"Could not write CSV file {csv_path}: {e}") from e


def _require_columns(df: pd.DataFrame, required: set[str]) -> None:
    if not required.issubset(df.columns):
        missing = required - set(df.columns)
        raise ValueError(f"Missing required columns: {sorted(missing)}")


def load_config(config_path: PathLike) -> ExperimentConfig:
    """Read an experiment config from JSON.

    Raises:
        FileNotFoundError: If the file doesn't exist
        ValueError: If the JSON is malformed or fails validation
    """
    try:
        with open(config_path, encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise FileNotFoundError(f"Config file not found: {config_path}")
    except json.JSONDecodeError as e:
        raise ValueError(f"Config file {config_path} is not valid JSON: {e}") from e

    try:
        return ExperimentConfig(**data)
    except ValidationError as e:
        raise ValueError(f"Invalid config {config_path}: {e}") from e


def _join_flags(flags: Sequence[str]) -> str:
    return FLAG_SEPARATOR.join(flag.replace(FLAG_SEPARATOR, ",") for flag in flags)


def write_results_to_csv(rows: Sequence[ResultRow], csv_path: PathLike) -> None:
    """Write result rows with a fixed column order and 6-decimal floats.

    Flags are joined by semicolons; a semicolon inside a flag becomes a comma.

    Args:
        rows: Result rows, already in grid order
        csv_path: Path to save the CSV file
    """
    records = [{**row.model_dump(), "flags": _join_flags(row.flags)} for row in rows]
    df = pd.DataFrame(records, columns=list(RESULT_COLUMNS))
    for column in ("L_h", "subset_size", "replication", "clusters_found"):
        df[column] = df[column].astype("Int64")
    for column in ("proportion", "ARI", "profile_accuracy", "runtime_ms"):
        df[column] = df[column].astype(float)
    _write_csv(df, csv_path)


def read_results_from_csv(csv_path: PathLike) -> list[ResultRow]:
    """Read result rows back from ``results.csv``.

    Raises:
        FileNotFoundError: If the CSV file doesn't exist
        ValueError: If required columns are missing
    """
    df = _read_csv(csv_path)
    _require_columns(df, set(RESULT_COLUMNS))

    def optional(value, cast):
        return None if pd.isna(value) else cast(value)

    rows = []
    for _, record in df.iterrows():
        raw_flags = record["flags"]
        flags = (
            []
            if pd.isna(raw_flags) or raw_flags == ""
            else str(raw_flags).split(FLAG_SEPARATOR)
        )
        rows.append(
            ResultRow(
                hierarchy=str(record["hierarchy"]),
                generating_model=str(record["generating_model"]),
                method=str(record["method"]),
                L_h=int(record["L_h"]),
                subset_size=int(record["subset_size"]),
                proportion=float(record["proportion"]),
                replication=int(record["replication"]),
                ARI=optional(record["ARI"], float),
                clusters_found=optional(record["clusters_found"], int),
                profile_accuracy=optional(record["profile_accuracy"], float),
                runtime_ms=optional(record["runtime_ms"], float),
                flags=flags,
            )
        )
    return rows


def write_q_matrix_to_csv(q_matrix: QMatrix, csv_path: PathLike) -> None:
    """One row per item, one 0/1 column per skill."""
    df = pd.DataFrame(
        q_matrix.as_array(),
        columns=[f"skill_{k + 1}" for k in range(q_matrix.num_skills)],
    )
    df.insert(0, "item", range(1, q_matrix.num_items + 1))
    _write_csv(df, csv_path)


def read_q_matrix_from_csv(csv_path: PathLike) -> QMatrix:
    df = _read_csv(csv_path)
    skill_columns = [c for c in df.columns if str(c).startswith("skill_")]
    if not skill_columns:
        raise ValueError("Missing required columns: skill_1..skill_K")
    return QMatrix(entries=df[skill_columns].to_numpy(dtype=int))


def _write_matrix(
    matrix: np.ndarray, csv_path: PathLike, row_name: str, column_prefix: str
) -> None:
    matrix = np.asarray(matrix)
    df = pd.DataFrame(
        matrix, columns=[f"{column_prefix}_{c + 1}" for c in range(matrix.shape[1])]
    )
    df.insert(0, row_name, range(1, len(matrix) + 1))
    _write_csv(df, csv_path)


def _read_matrix(csv_path: PathLike, column_prefix: str, dtype) -> np.ndarray:
    df = _read_csv(csv_path)
    columns = [c for c in df.columns if str(c).startswith(f"{column_prefix}_")]
    if not columns:
        raise ValueError(f"Missing required columns: {column_prefix}_1..")
    return df[columns].to_numpy(dtype=dtype)


def write_responses_to_csv(responses: np.ndarray, csv_path: PathLike) -> None:
    """One row per student, one 0/1 column per item."""
    _write_matrix(responses, csv_path, "student", "item")


def read_responses_from_csv(csv_path: PathLike) -> np.ndarray:
    return _read_matrix(csv_path, "item", int)


def write_capability_to_csv(capability: np.ndarray, csv_path: PathLike) -> None:
    """One row per student, one capability column per skill."""
    _write_matrix(capability, csv_path, "student", "skill")


def read_capability_from_csv(csv_path: PathLike) -> np.ndarray:
    return _read_matrix(csv_path, "skill", float)


def write_truth_to_csv(profiles: np.ndarray, csv_path: PathLike) -> None:
    """True profile of every student as a bit string."""
    df = pd.DataFrame(
        {
            "student": range(1, len(profiles) + 1),
            "profile": [profile_to_string(row) for row in np.asarray(profiles)],
        }
    )
    _write_csv(df, csv_path)


def read_truth_from_csv(csv_path: PathLike) -> np.ndarray:
    try:
        # Bit strings keep their leading zeros.
        df = pd.read_csv(csv_path, dtype={"profile": str})
    except FileNotFoundError:
        raise FileNotFoundError(f"CSV file not found: {csv_path}")
    _require_columns(df, {"profile"})
    return np.array([profile_from_string(bits) for bits in df["profile"]], dtype=int)


def write_assignments_to_csv(
    result: ClusteringResult,
    csv_path: PathLike,
    labels: Optional[Sequence[Optional[Profile]]] = None,
) -> None:
    """Cluster (1-based) and, when known, profile of every student."""
    labels = labels if labels is not None else result.labels
    profiles = [
        profile_to_string(labels[c]) if labels is not None and labels[c] else ""
        for c in result.assignment
    ]
    df = pd.DataFrame(
        {
            "student": range(1, len(result.assignment) + 1),
            "cluster": result.assignment + 1,
            "profile": profiles,
        }
    )
    _write_csv(df, csv_path)


def write_trace_to_csv(trace: Sequence[float], csv_path: PathLike) -> None:
    """Per-iteration objective values."""
    df = pd.DataFrame(
        {"iteration": range(1, len(trace) + 1), "objective": list(trace)}
    )
    _write_csv(df, csv_path)
