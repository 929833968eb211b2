"""Append-only JSONL event log with crash-tolerant recovery.

Every accepted write is one JSON line {seq, kind, payload, received_at}.
Sequences are gap-free from 1 per file. A torn final line (partial write at
the tail) is truncated on open; a corrupt record anywhere else aborts
recovery with the sequence number it should have carried.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterator, Optional

from .errors import RecoveryError, StorageError


@dataclass(frozen=True)
class EventLogRecord:
    seq: int
    kind: str
    payload: Any
    received_at: str   # RFC 3339; informational, never part of derived state

    def to_line(self) -> str:
        return json.dumps(
            {
                "seq": self.seq,
                "kind": self.kind,
                "payload": self.payload,
                "received_at": self.received_at,
            },
            separators=(",", ":"),
            sort_keys=False,
        )


def _parse_line(raw: bytes, expected_seq: int) -> EventLogRecord:
    try:
        obj = json.loads(raw.decode("utf-8"))
        if not isinstance(obj, dict):
            raise ValueError("record is not an object")
        seq = obj["seq"]
        kind = obj["kind"]
        payload = obj["payload"]
        received_at = obj["received_at"]
        if not isinstance(seq, int) or isinstance(seq, bool):
            raise ValueError("seq is not an integer")
        if not isinstance(kind, str) or not isinstance(received_at, str):
            raise ValueError("kind/received_at are not strings")
    except (ValueError, KeyError, UnicodeDecodeError) as exc:
        raise RecoveryError(f"unreadable record: {exc}", sequence=expected_seq)
    if seq != expected_seq:
        raise RecoveryError(
            f"sequence jump: found {seq}, expected {expected_seq}", sequence=expected_seq
        )
    return EventLogRecord(seq=seq, kind=kind, payload=payload, received_at=received_at)


class EventLog:
    """Single-writer log bound to one file; reads happen only at open time."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self._fh: Optional[Any] = None
        self._next_seq = 1

    @property
    def last_seq(self) -> int:
        return self._next_seq - 1

    def open(self) -> list[EventLogRecord]:
        """Scan the file, truncate a torn tail, position for appends, and
        return every durable record in order."""
        records: list[EventLogRecord] = []
        good_end = 0
        if self.path.exists():
            data = self.path.read_bytes()
            offset = 0
            expected = 1
            while offset < len(data):
                nl = data.find(b"\n", offset)
                if nl == -1:
                    # No terminator: a torn final write. Drop it.
                    break
                line = data[offset:nl]
                if line.strip():
                    try:
                        records.append(_parse_line(line, expected))
                    except RecoveryError:
                        if data.find(b"\n", nl + 1) == -1 and not data[nl + 1 :].strip():
                            # Corrupt *final* line is also a torn write.
                            break
                        raise
                    expected += 1
                good_end = nl + 1
                offset = nl + 1
            if good_end < len(data):
                with open(self.path, "r+b") as fh:
                    fh.truncate(good_end)
            self._next_seq = expected
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "ab")
        return records

    def append(self, kind: str, payload: Any, received_at: str) -> int:
        seq = self.append_many(kind, [payload], received_at)[0]
        return seq

    def append_many(self, kind: str, payloads: list[Any], received_at: str) -> list[int]:
        """Append a batch and fsync once; all records are durable on return."""
        if self._fh is None:
            raise StorageError("event log is not open")
        seqs: list[int] = []
        try:
            for payload in payloads:
                record = EventLogRecord(self._next_seq, kind, payload, received_at)
                self._fh.write(record.to_line().encode("utf-8") + b"\n")
                seqs.append(self._next_seq)
                self._next_seq += 1
            self._fh.flush()
            os.fsync(self._fh.fileno())
        except OSError as exc:
            raise StorageError(f"event log append failed: {exc}")
        return seqs

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self) -> "EventLog":
        self.open()
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.close()


def read_log(path: Path) -> Iterator[EventLogRecord]:
    """Read-only scan with the same tolerance rules as EventLog.open, but
    without touching the file."""
    path = Path(path)
    if not path.exists():
        return
    data = path.read_bytes()
    offset = 0
    expected = 1
    while offset < len(data):
        nl = data.find(b"\n", offset)
        if nl == -1:
            return
        line = data[offset:nl]
        if line.strip():
            try:
                record = _parse_line(line, expected)
            except RecoveryError:
                if data.find(b"\n", nl + 1) == -1 and not data[nl + 1 :].strip():
                    return
                raise
            expected += 1
            yield record
        offset = nl + 1
