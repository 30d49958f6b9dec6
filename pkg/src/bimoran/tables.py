"""Delimited table output and the fixed-width binary event log.

CSV files carry '#'-prefixed metadata lines (tool version, the full
effective configuration, the seed) above a fixed, documented column header.
Floats are printed with 17 significant digits so equal configurations
produce byte-identical files. The binary event log records one fixed-width
record per step for replaying a run; see docs/formats.md.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__

__all__ = [
    "Table",
    "format_value",
    "emit_csv",
    "read_csv",
    "EventLogWriter",
    "read_event_log",
    "EVENT_LOG_MAGIC",
]

EVENT_LOG_MAGIC = b"BMEV"
_LOG_HEADER = struct.Struct("<4sIIId")  # magic, version, N, initial count, selection
_LOG_RECORD = struct.Struct("<QIIIddd")  # step, mother, father, killed, y, u, v
EVENT_LOG_VERSION = 1


@dataclass
class Table:
    """Columns, rows and header metadata of one delimited output."""

    columns: list[str]
    rows: list[tuple] = field(default_factory=list)
    meta: dict[str, object] = field(default_factory=dict)

    def append(self, *values) -> None:
        if len(values) != len(self.columns):
            raise ValueError(
                f"row has {len(values)} values for {len(self.columns)} columns"
            )
        self.rows.append(values)

    def column(self, name: str) -> list:
        idx = self.columns.index(name)
        return [row[idx] for row in self.rows]


def format_value(value) -> str:
    """Render one cell: floats at 17 significant digits, the rest via str."""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def render_csv(table: Table) -> str:
    lines = [f"# bimoran {__version__}"]
    for key in sorted(table.meta):
        lines.append(f"# {key} = {table.meta[key]}")
    lines.append(",".join(table.columns))
    for row in table.rows:
        lines.append(",".join(format_value(v) for v in row))
    return "\n".join(lines) + "\n"


def emit_csv(table: Table, path) -> Path:
    """Write the table as UTF-8 CSV; I/O failures surface with the path."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(render_csv(table), encoding="utf-8", newline="\n")
    except OSError as exc:
        raise OSError(f"cannot write table to {path}: {exc}") from exc
    return path


def read_csv(path) -> Table:
    """Read back a table written by ``emit_csv`` (cells stay strings)."""
    path = Path(path)
    meta: dict[str, object] = {}
    columns: list[str] | None = None
    rows: list[tuple] = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                meta[key.strip()] = value.strip()
            continue
        if columns is None:
            columns = line.split(",")
        else:
            rows.append(tuple(line.split(",")))
    if columns is None:
        raise ValueError(f"{path} contains no header row")
    return Table(columns=columns, rows=rows, meta=meta)


class EventLogWriter:
    """Streams fixed-width per-step records to a binary log file."""

    def __init__(self, path, n_individuals: int, initial_count: int, selection: float):
        self._path = Path(path)
        self._path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self._path, "wb")
        self._fh.write(
            _LOG_HEADER.pack(
                EVENT_LOG_MAGIC, EVENT_LOG_VERSION, n_individuals,
                initial_count, selection,
            )
        )

    def write(self, step, mother, father, killed, y, u, v) -> None:
        self._fh.write(_LOG_RECORD.pack(step, mother, father, killed, y, u, v))

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def read_event_log(path):
    """Parse a binary event log into (header dict, list of record tuples)."""
    raw = Path(path).read_bytes()
    if len(raw) < _LOG_HEADER.size:
        raise ValueError(f"{path}: truncated event log header")
    magic, version, n, initial_count, selection = _LOG_HEADER.unpack_from(raw, 0)
    if magic != EVENT_LOG_MAGIC:
        raise ValueError(f"{path}: not an event log (bad magic {magic!r})")
    if version != EVENT_LOG_VERSION:
        raise ValueError(f"{path}: unsupported event log version {version}")
    body = raw[_LOG_HEADER.size:]
    if len(body) % _LOG_RECORD.size:
        raise ValueError(f"{path}: truncated event log record")
    records = [
        _LOG_RECORD.unpack_from(body, offset)
        for offset in range(0, len(body), _LOG_RECORD.size)
    ]
    header = {
        "version": version,
        "n_individuals": n,
        "initial_count": initial_count,
        "selection": selection,
    }
    return header, records
