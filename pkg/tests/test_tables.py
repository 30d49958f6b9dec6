"""CSV rendering, metadata headers, and the binary event log format."""

import struct

import pytest

from bimoran.tables import (
    EVENT_LOG_MAGIC,
    EventLogWriter,
    Table,
    emit_csv,
    format_value,
    read_csv,
    read_event_log,
    render_csv,
)


class TestFormatting:
    def test_seventeen_significant_digits(self):
        assert format_value(1 / 3) == "0.33333333333333331"
        assert format_value(0.1) == "0.10000000000000001"

    def test_integers_and_strings_pass_through(self):
        assert format_value(40000) == "40000"
        assert format_value("hit") == "hit"

    def test_booleans_render_as_bits(self):
        assert format_value(True) == "1"
        assert format_value(False) == "0"


class TestCsv:
    def make_table(self):
        table = Table(columns=["a", "b"], meta={"seed": 7, "kind": "demo"})
        table.append(0.5, 1)
        table.append(1 / 3, 2)
        return table

    def test_render_layout(self):
        text = render_csv(self.make_table())
        lines = text.splitlines()
        assert lines[0].startswith("# bimoran ")
        assert "# kind = demo" in lines
        assert "# seed = 7" in lines
        assert lines[3] == "a,b"
        assert lines[4] == "0.5,1"

    def test_row_width_checked(self):
        table = Table(columns=["a", "b"])
        with pytest.raises(ValueError):
            table.append(1.0)

    def test_byte_identical_rerender(self):
        assert render_csv(self.make_table()) == render_csv(self.make_table())

    def test_roundtrip(self, tmp_path):
        path = emit_csv(self.make_table(), tmp_path / "sub" / "demo.csv")
        back = read_csv(path)
        assert back.columns == ["a", "b"]
        assert back.meta["seed"] == "7"
        assert back.rows[0] == ("0.5", "1")

    def test_write_failure_names_path(self, tmp_path):
        blocker = tmp_path / "blocker"
        blocker.write_text("file, not a directory")
        with pytest.raises(OSError, match="blocker"):
            emit_csv(self.make_table(), blocker / "demo.csv")


class TestEventLog:
    def test_roundtrip(self, tmp_path):
        path = tmp_path / "run.log"
        with EventLogWriter(path, 10, 3, 1.5) as log:
            log.write(1, 0, 5, 9, 0.3, 0.3, 0.0)
            log.write(2, 4, 4, 0, 0.2, 0.25, 0.05)
        header, records = read_event_log(path)
        assert header == {
            "version": 1,
            "n_individuals": 10,
            "initial_count": 3,
            "selection": 1.5,
        }
        assert records[0] == (1, 0, 5, 9, 0.3, 0.3, 0.0)
        assert records[1][:4] == (2, 4, 4, 0)

    def test_fixed_width_record(self, tmp_path):
        path = tmp_path / "run.log"
        with EventLogWriter(path, 4, 1, 1.0) as log:
            log.write(1, 0, 1, 2, 0.25, 0.25, 0.0)
            log.write(2, 3, 0, 1, 0.5, 0.375, 0.0)
        size = path.stat().st_size
        assert size == 24 + 2 * 44  # documented header and record widths

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.log"
        path.write_bytes(b"XXXX" + bytes(20))
        with pytest.raises(ValueError, match="magic"):
            read_event_log(path)

    def test_truncated_record_rejected(self, tmp_path):
        path = tmp_path / "trunc.log"
        with EventLogWriter(path, 4, 1, 1.0) as log:
            log.write(1, 0, 1, 2, 0.25, 0.25, 0.0)
        path.write_bytes(path.read_bytes()[:-3])
        with pytest.raises(ValueError, match="truncated"):
            read_event_log(path)

    def test_header_layout(self, tmp_path):
        path = tmp_path / "hdr.log"
        EventLogWriter(path, 7, 2, 0.5).close()
        raw = path.read_bytes()
        assert raw[:4] == EVENT_LOG_MAGIC
        version, n, count = struct.unpack_from("<III", raw, 4)
        assert (version, n, count) == (1, 7, 2)
        (selection,) = struct.unpack_from("<d", raw, 16)
        assert selection == 0.5
