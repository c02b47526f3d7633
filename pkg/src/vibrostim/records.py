"""Append-only persistence of session records.

Each session gets ``<session_id>.rec``, a line-delimited JSON file. Every
state transition appends one event line immediately (open, write, flush,
close), so a crash never loses finalized work and files are never
rewritten. The line for the ``finalized`` event embeds the full session
record; readers scan for it.
"""

from __future__ import annotations

import time
from pathlib import Path
from typing import Iterable

from . import schemas
from .errors import SchemaError
from .session import SessionRecord

_EVENT_FIELDS_REQUIRED = ("ts", "event")
_EVENT_FIELDS_OPTIONAL = ("v", "session", "record", "stimulus")


class RecordStore:
    """Reads and appends .rec files under one directory."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def path_for(self, session_id: str) -> Path:
        return self.directory / f"{session_id}.rec"

    def append_event(self, session_id: str, event: str, **payload) -> None:
        line = {"v": schemas.SCHEMA_VERSION, "ts": time.time(), "event": event}
        line.update(payload)
        with open(self.path_for(session_id), "a", encoding="utf-8") as fh:
            fh.write(schemas.dumps(line) + "\n")
            fh.flush()

    def append_finalized(self, record: SessionRecord) -> Path:
        self.append_event(record.session_id, "finalized", record=schemas.record_to_doc(record))
        return self.path_for(record.session_id)

    def load_finalized(self) -> list[SessionRecord]:
        """All finalized records in the directory, sorted by session id."""
        records = []
        for path in sorted(self.directory.glob("*.rec")):
            record = read_record_file(path)
            if record is not None:
                records.append(record)
        return records


def read_record_file(path: str | Path) -> SessionRecord | None:
    """Extract the finalized record from one .rec file, if it has one."""
    path = Path(path)
    record = None
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not raw.strip():
            continue
        doc = schemas.loads(raw)
        if not isinstance(doc, dict) or "event" not in doc:
            raise SchemaError(f"{path.name}:{lineno}: not an event line", path="event")
        if doc["event"] == "finalized":
            record = schemas.record_from_doc(doc.get("record"), path="record")
    return record


def read_record_files(paths: Iterable[str | Path]) -> list[SessionRecord]:
    """Finalized records from many files; unfinalized files are skipped."""
    records = []
    for path in paths:
        record = read_record_file(path)
        if record is not None:
            records.append(record)
    return records
