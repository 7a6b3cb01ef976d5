"""
Test snapshot files
"""
import numpy as np
import pytest

from thermotumor.core.exceptions import OutputError, SnapshotFormatError
from thermotumor.models.grid import Field
from thermotumor.models.state import State
from thermotumor.repositories.snapshots import (
    FORMAT_VERSION,
    MAGIC,
    format_snapshot,
    parse_snapshot,
    read_snapshot,
    write_snapshot,
)
from tests.factories import make_grid, random_admissible_state


@pytest.fixture
def stored(rng):
    return random_admissible_state(make_grid(dim=2, cells=3), rng).evolve(t=0.125)


class TestSnapshotFormat:
    """Test the text layout of snapshots"""

    def test_header(self, stored):
        """Test the self-describing header"""
        lines = format_snapshot(stored).splitlines()
        assert lines[:6] == [
            MAGIC,
            f"format_version {FORMAT_VERSION}",
            "dim 2",
            "cells 3 3",
            "extent 1.0 1.0",
            "time 0.125",
        ]
        assert lines[6] == "phi"
        assert lines[6 + 10] == "theta"
        assert lines[6 + 20] == "sigma"
        assert len(lines) == 6 + 3 * 10

    def test_values_survive_bit_for_bit(self, stored):
        """Test shortest round-trip repr preserves every double"""
        state = stored.evolve(phi=Field(stored.grid, np.full(9, 0.1) + np.arange(9) * 1e-17 + 1.0 / 3.0))
        assert parse_snapshot(format_snapshot(state)).equals(state)

    def test_write_and_read(self, stored, tmp_path):
        """Test the file is written atomically and read back"""
        path = write_snapshot(stored, tmp_path / "nested" / "snap.txt")

        assert read_snapshot(path).equals(stored)
        assert sorted(p.name for p in path.parent.iterdir()) == ["snap.txt"]


class TestSnapshotErrors:
    """Test malformed snapshots are rejected whole"""

    def test_bad_magic(self, stored):
        """Test files without the magic line"""
        with pytest.raises(SnapshotFormatError) as exc_info:
            parse_snapshot("not a snapshot\n")

        assert "not a thermotumor snapshot" in str(exc_info.value)

    def test_unsupported_version(self, stored):
        """Test a future format_version"""
        text = format_snapshot(stored).replace("format_version 1", "format_version 2")

        with pytest.raises(SnapshotFormatError) as exc_info:
            parse_snapshot(text)

        assert exc_info.value.context["format_version"] == 2

    def test_shape_mismatch(self, stored):
        """Test a header promising more cells than the body holds"""
        text = format_snapshot(stored).replace("cells 3 3", "cells 3 4")

        with pytest.raises(SnapshotFormatError) as exc_info:
            parse_snapshot(text)

        assert "shape mismatch" in str(exc_info.value)

    def test_dim_mismatch(self, stored):
        """Test dim must agree with cells and extent"""
        text = format_snapshot(stored).replace("dim 2", "dim 3")

        with pytest.raises(SnapshotFormatError):
            parse_snapshot(text)

    def test_truncated_header(self):
        """Test a header cut short"""
        with pytest.raises(SnapshotFormatError):
            parse_snapshot(f"{MAGIC}\nformat_version 1\ndim 1\n")

    def test_non_finite_value(self, stored):
        """Test NaN entries are refused"""
        lines = format_snapshot(stored).splitlines()
        lines[8] = "nan"

        with pytest.raises(SnapshotFormatError) as exc_info:
            parse_snapshot("\n".join(lines) + "\n")

        assert "non-finite" in str(exc_info.value)

    def test_unparsable_value(self, stored):
        """Test garbage entries are refused"""
        lines = format_snapshot(stored).splitlines()
        lines[20] = "twelve"

        with pytest.raises(SnapshotFormatError):
            parse_snapshot("\n".join(lines) + "\n")

    def test_misplaced_block_label(self, stored):
        """Test block labels must appear in order"""
        text = format_snapshot(stored).replace("theta", "sigma", 1)

        with pytest.raises(SnapshotFormatError) as exc_info:
            parse_snapshot(text)

        assert exc_info.value.context["line"] == 17

    def test_negative_time(self, stored):
        """Test snapshot times must be nonnegative"""
        text = format_snapshot(stored).replace("time 0.125", "time -1.0")

        with pytest.raises(SnapshotFormatError):
            parse_snapshot(text)

    def test_read_missing_file(self, tmp_path):
        """Test a missing snapshot is an I/O error"""
        with pytest.raises(OutputError):
            read_snapshot(tmp_path / "absent.txt")

    def test_write_into_file_path(self, stored, tmp_path):
        """Test an unwritable destination is an I/O error"""
        blocker = tmp_path / "blocker"
        blocker.write_text("x")

        with pytest.raises(OutputError):
            write_snapshot(stored, blocker / "snap.txt")


def test_state_time_must_be_nonnegative():
    """Test State rejects negative times"""
    with pytest.raises(ValueError):
        State.constant(make_grid(cells=4), 0.0, 0.0, 1.0, t=-1.0)
