"""Tests for CSV and JSON persistence."""

import json
import os
import tempfile
from pathlib import Path

import numpy as np
import pytest

from skillscape.models import ClusteringResult, ResultRow
from skillscape.utils.io import (
    load_config,
    read_capability_from_csv,
    read_q_matrix_from_csv,
    read_responses_from_csv,
    read_results_from_csv,
    read_truth_from_csv,
    write_assignments_to_csv,
    write_capability_to_csv,
    write_q_matrix_to_csv,
    write_responses_to_csv,
    write_results_to_csv,
    write_trace_to_csv,
    write_truth_to_csv,
)


def _rows():
    return [
        ResultRow(
            hierarchy="null",
            generating_model="NIDA",
            method="hc",
            L_h=64,
            subset_size=3,
            proportion=3 / 64,
            replication=0,
            ARI=0.123456789,
            clusters_found=3,
            profile_accuracy=0.5,
            flags=["degenerate_ari", "label_collision"],
        ),
        ResultRow(
            hierarchy="null",
            generating_model="NIDA",
            method="kmeans",
            L_h=64,
            subset_size=3,
            proportion=3 / 64,
            replication=0,
            flags=["error:ValueError: Cannot pick 64 centers from 3 distinct points"],
        ),
    ]


def test_results_csv_round_trip():
    """Test writing and reading result rows, including blanks and flags."""
    with tempfile.TemporaryDirectory() as temp_dir:
        path = Path(temp_dir) / "results.csv"
        write_results_to_csv(_rows(), path)

        lines = path.read_text().splitlines()
        assert lines[0] == (
            "hierarchy,generating_model,method,L_h,subset_size,proportion,"
            "replication,ARI,clusters_found,profile_accuracy,runtime_ms,flags"
        )
        assert lines[1] == (
            "null,NIDA,hc,64,3,0.046875,0,0.123457,3,0.500000,,"
            "degenerate_ari;label_collision"
        )

        rows = read_results_from_csv(path)
        assert rows[0].hierarchy == "null"
        assert rows[0].ARI == pytest.approx(0.123457)
        assert rows[0].flags == ["degenerate_ari", "label_collision"]
        assert rows[1].failed
        assert rows[1].ARI is None
        assert rows[1].clusters_found is None
        assert rows[1].runtime_ms is None


def test_semicolon_inside_flag_stays_one_flag():
    """Test that a message containing the separator reads back as a single flag."""
    row = _rows()[1].model_copy(
        update={"flags": ["error:ValueError: bad size; try fewer", "label_collision"]}
    )
    with tempfile.TemporaryDirectory() as temp_dir:
        path = Path(temp_dir) / "results.csv"
        write_results_to_csv([row], path)
        [read_back] = read_results_from_csv(path)
    assert read_back.flags == ["error:ValueError: bad size, try fewer", "label_collision"]


def test_results_csv_header_only_and_line_count(sample_rows):
    """Test an empty result set and one line per row."""
    with tempfile.TemporaryDirectory() as temp_dir:
        empty = Path(temp_dir) / "empty.csv"
        write_results_to_csv([], empty)
        assert len(empty.read_text().splitlines()) == 1
        assert read_results_from_csv(empty) == []

        full = Path(temp_dir) / "full.csv"
        write_results_to_csv(sample_rows[:6], full)
        assert len(full.read_text().splitlines()) == 7


def test_read_results_missing_file_and_columns():
    """Test error handling for bad result files."""
    with pytest.raises(FileNotFoundError, match="CSV file not found"):
        read_results_from_csv("/nonexistent/results.csv")

    with tempfile.NamedTemporaryFile(mode="w", suffix=".csv", delete=False) as f:
        f.write("hierarchy,method\nlinear,hc\n")
        temp_file = f.name
    try:
        with pytest.raises(ValueError, match="Missing required columns"):
            read_results_from_csv(temp_file)
    finally:
        os.unlink(temp_file)


def test_matrix_csv_round_trips(small_q_matrix):
    """Test the Q-matrix, response, capability and truth files."""
    responses = np.array([[1, 0, 1], [0, 0, 1]])
    capability = np.array([[0.5, 1.0], [0.0, 0.5]])
    truth = np.array([[0, 1], [1, 1]])

    with tempfile.TemporaryDirectory() as temp_dir:
        base = Path(temp_dir)
        write_q_matrix_to_csv(small_q_matrix, base / "q_matrix.csv")
        write_responses_to_csv(responses, base / "responses.csv")
        write_capability_to_csv(capability, base / "capability.csv")
        write_truth_to_csv(truth, base / "truth.csv")

        assert (base / "q_matrix.csv").read_text().splitlines()[:2] == [
            "item,skill_1,skill_2",
            "1,1,0",
        ]
        assert (base / "truth.csv").read_text().splitlines() == [
            "student,profile",
            "1,01",
            "2,11",
        ]
        assert read_q_matrix_from_csv(base / "q_matrix.csv") == small_q_matrix
        assert np.array_equal(read_responses_from_csv(base / "responses.csv"), responses)
        assert np.allclose(read_capability_from_csv(base / "capability.csv"), capability)
        assert np.array_equal(read_truth_from_csv(base / "truth.csv"), truth)


def test_matrix_readers_reject_wrong_files():
    """Test missing files and missing columns."""
    with pytest.raises(FileNotFoundError, match="CSV file not found"):
        read_truth_from_csv("/nonexistent/truth.csv")
    with pytest.raises(FileNotFoundError, match="CSV file not found"):
        read_capability_from_csv("/nonexistent/capability.csv")

    with tempfile.NamedTemporaryFile(mode="w", suffix=".csv", delete=False) as f:
        f.write("student,score\n1,0.5\n")
        temp_file = f.name
    try:
        with pytest.raises(ValueError, match="Missing required columns"):
            read_capability_from_csv(temp_file)
    finally:
        os.unlink(temp_file)


def test_assignment_and_trace_files():
    """Test the cluster subcommand outputs."""
    result = ClusteringResult(
        assignment=[0, 1, 0],
        centers=[[0.1, 0.0], [0.9, 0.9]],
        objective=0.02,
        iterations=2,
        method_tag="emptyk",
        labels=((0, 0), None),
    )
    with tempfile.TemporaryDirectory() as temp_dir:
        assignments = Path(temp_dir) / "assignments.csv"
        write_assignments_to_csv(result, assignments)
        assert assignments.read_text().splitlines() == [
            "student,cluster,profile",
            "1,1,00",
            "2,2,",
            "3,1,00",
        ]

        write_assignments_to_csv(result, assignments, labels=[(0, 0), (1, 1)])
        assert assignments.read_text().splitlines()[2] == "2,2,11"

        trace = Path(temp_dir) / "trace.csv"
        write_trace_to_csv([0.5, 0.25], trace)
        assert trace.read_text().splitlines() == [
            "iteration,objective",
            "1,0.500000",
            "2,0.250000",
        ]


def test_load_config():
    """Test reading, validating and rejecting config files."""
    with tempfile.TemporaryDirectory() as temp_dir:
        good = Path(temp_dir) / "config.json"
        good.write_text(json.dumps({"seed": 3, "hierarchies": ["linear"], "N": 50}))
        cfg = load_config(good)
        assert cfg.seed == 3
        assert cfg.N == 50

        broken = Path(temp_dir) / "broken.json"
        broken.write_text("{seed: 3")
        with pytest.raises(ValueError, match="not valid JSON"):
            load_config(broken)

        invalid = Path(temp_dir) / "invalid.json"
        invalid.write_text(json.dumps({"seed": 3, "hierarchies": ["spiral"]}))
        with pytest.raises(ValueError, match="Unknown hierarchy"):
            load_config(invalid)

    with pytest.raises(FileNotFoundError, match="Config file not found"):
        load_config("/nonexistent/config.json")
