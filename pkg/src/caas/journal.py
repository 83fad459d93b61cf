"""Append-only newline-delimited JSON journals.

Each store persists its mutations as one journal and rebuilds its in-memory
index by replaying it on startup.  Records are written with sorted keys so
journal files diff cleanly; they are regular JSON, one object per line.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any, Iterator


class JsonlJournal:
    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)

    def append(self, record: dict[str, Any]) -> None:
        line = json.dumps(record, sort_keys=True, separators=(",", ":"))
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def __iter__(self) -> Iterator[dict[str, Any]]:
        if not self.path.exists():
            return
        with open(self.path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    yield json.loads(line)

    def __len__(self) -> int:
        return sum(1 for _ in self)


class NullJournal(JsonlJournal):
    """In-memory stand-in used when no data directory is configured."""

    def __init__(self):
        self._records: list[dict[str, Any]] = []

    def append(self, record: dict[str, Any]) -> None:
        self._records.append(json.loads(json.dumps(record)))

    def __iter__(self) -> Iterator[dict[str, Any]]:
        return iter(self._records)
