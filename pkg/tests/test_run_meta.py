"""Tests for the run metadata recorder."""

import json
import os
import tempfile
from unittest.mock import Mock

import pytest

from skillscape import __version__
from skillscape.models import SkippedCell
from skillscape.utils.run_meta import CONVENTIONS, RunRecorder, load_run_meta


def test_init(small_config):
    """Test RunRecorder initialization."""
    recorder = RunRecorder(small_config)

    assert recorder.config == small_config
    assert recorder.q_matrices == {}
    assert recorder.skipped_cells == []
    assert recorder.total_rows == 0
    assert recorder.error_rows == 0


def test_record_rows_counts_flags(small_config, sample_rows):
    """Test row, failure and flag counting."""
    recorder = RunRecorder(small_config)
    failed = sample_rows[0].model_copy(
        update={"ARI": None, "flags": ["error:ValueError: Cannot pick 7 centers"]}
    )
    flagged = sample_rows[1].model_copy(update={"flags": ["label_collision"]})

    recorder.record_rows([failed, flagged, sample_rows[2]])

    assert recorder.total_rows == 3
    assert recorder.error_rows == 1
    assert recorder.flag_counts == {"error:ValueError": 1, "label_collision": 1}


def test_get_metadata(small_config, small_q_matrix):
    """Test the metadata contents."""
    recorder = RunRecorder(small_config)
    recorder.record_q_matrix("shared", small_q_matrix)
    recorder.record_skipped(
        SkippedCell(
            hierarchy="linear",
            generating_model="DINA",
            subset_size=8,
            reason="subset size exceeds the 7 profiles",
        )
    )

    meta = recorder.get_metadata()
    assert meta.version == __version__
    assert meta.master_seed == 7
    assert meta.q_policy == "shared"
    assert meta.q_matrices == {"shared": [[1, 0], [1, 1], [0, 1]]}
    assert meta.config["N"] == 60
    assert len(meta.skipped_cells) == 1
    assert meta.conventions == CONVENTIONS


def test_per_replication_policy(small_config):
    """Test the Q policy label when Q is redrawn per replication."""
    config = small_config.model_copy(update={"resample_q_per_replication": True})
    assert RunRecorder(config).get_metadata().q_policy == "per_replication"


def test_save_and_load(small_config, small_q_matrix):
    """Test saving and loading run metadata."""
    recorder = RunRecorder(small_config)
    recorder.record_q_matrix("shared", small_q_matrix)

    with tempfile.NamedTemporaryFile(mode="w", suffix=".json", delete=False) as f:
        temp_file = f.name

    try:
        recorder.save(temp_file)

        with open(temp_file, encoding="utf-8") as f:
            data = json.load(f)
        assert data["master_seed"] == 7
        assert "timestamp" not in json.dumps(data)

        loaded = load_run_meta(temp_file)
        assert loaded == recorder.get_metadata()
    finally:
        os.unlink(temp_file)


def test_save_is_byte_stable(small_config):
    """Test that saving twice writes identical files."""
    with tempfile.TemporaryDirectory() as temp_dir:
        first = os.path.join(temp_dir, "a.json")
        second = os.path.join(temp_dir, "b.json")
        RunRecorder(small_config).save(first)
        RunRecorder(small_config).save(second)
        with open(first, "rb") as a, open(second, "rb") as b:
            assert a.read() == b.read()


def test_load_nonexistent_file():
    """Test loading from a nonexistent file."""
    with pytest.raises(FileNotFoundError, match="Run metadata not found"):
        load_run_meta("/nonexistent/run_meta.json")


def test_save_to_unwritable_path(small_config):
    """Test that write failures name the path."""
    with pytest.raises(OSError, match="Could not write run metadata"):
        RunRecorder(small_config).save("/nonexistent/dir/run_meta.json")


def test_print_summary(small_config, sample_rows):
    """Test printing the run summary."""
    recorder = RunRecorder(small_config)
    recorder.record_rows(sample_rows[:2])
    recorder.record_skipped(
        SkippedCell(
            hierarchy="linear", generating_model="DINA", subset_size=8, reason="too big"
        )
    )

    mock_console = Mock()
    recorder.print_summary(mock_console)

    printed = " ".join(str(call.args[0]) for call in mock_console.print.call_args_list)
    assert "Run Summary" in printed
    assert "Master seed: 7" in printed
    assert "Rows written: 2" in printed
    assert "Skipped grid cells: 1" in printed
