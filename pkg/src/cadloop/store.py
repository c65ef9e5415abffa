"""Append-only on-disk event log plus artifact files, one directory per run."""

from __future__ import annotations

import json
import logging
import os
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from .errors import RunNotFoundError, SequenceError, StoreError
from .records import (
    EventKind,
    RunEvent,
    RunRecord,
    RunStatus,
    fold_events,
)

log = logging.getLogger(__name__)

EVENTS_FILENAME = "events.jsonl"


def new_run_id() -> str:
    return uuid.uuid4().hex[:12]


def _check_artifact_name(name: str) -> None:
    p = Path(name)
    if p.is_absolute() or ".." in p.parts:
        raise StoreError(f"illegal artifact name {name!r}")


@dataclass
class EventStore:
    """Event log + artifacts under ``root/<run_id>/``.

    With ``durable`` set, every append is flushed and fsynced before
    returning; tests that churn thousands of runs turn it off.
    """

    root: Path
    durable: bool = True
    _locks: dict[str, threading.Lock] = field(default_factory=dict, repr=False)
    _registry_lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __post_init__(self) -> None:
        self.root = Path(self.root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _lock_for(self, run_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(run_id, threading.Lock())

    def run_dir(self, run_id: str) -> Path:
        return self.root / run_id

    def _events_path(self, run_id: str) -> Path:
        return self.run_dir(run_id) / EVENTS_FILENAME

    # -- events ------------------------------------------------------------

    def append(self, event: RunEvent) -> None:
        with self._lock_for(event.run_id):
            path = self._events_path(event.run_id)
            last_seq, sealed = self._tail_state(event.run_id)
            if sealed and event.kind is not EventKind.VERDICT_RECORDED:
                raise SequenceError(
                    f"run {event.run_id} is finished; only verdict_recorded may follow"
                )
            if event.seq != last_seq + 1:
                raise SequenceError(
                    f"run {event.run_id}: expected seq {last_seq + 1}, got {event.seq}"
                )
            path.parent.mkdir(parents=True, exist_ok=True)
            line = json.dumps(event.to_dict(), sort_keys=True)
            with open(path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                if self.durable:
                    fh.flush()
                    os.fsync(fh.fileno())

    def _tail_state(self, run_id: str) -> tuple[int, bool]:
        """(last seq, sealed?) without materializing records; seq is 1-based."""
        path = self._events_path(run_id)
        if not path.exists():
            return 0, False
        last_seq = 0
        sealed = False
        with open(path, encoding="utf-8") as fh:
            for raw in fh:
                raw = raw.strip()
                if not raw:
                    continue
                data = json.loads(raw)
                last_seq = data["seq"]
                if data["kind"] == EventKind.RUN_FINISHED.value:
                    sealed = True
        return last_seq, sealed

    def next_seq(self, run_id: str) -> int:
        last, _ = self._tail_state(run_id)
        return last + 1

    def read_events(self, run_id: str, since: int = 0) -> list[RunEvent]:
        path = self._events_path(run_id)
        if not path.exists():
            raise RunNotFoundError(f"no such run {run_id!r}")
        events: list[RunEvent] = []
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                raw = raw.strip()
                if not raw:
                    continue
                try:
                    data = json.loads(raw)
                    event = RunEvent.from_dict(data)
                except (json.JSONDecodeError, KeyError, ValueError) as exc:
                    raise StoreError(
                        f"run {run_id}: corrupt event at line {lineno}: {exc}"
                    ) from exc
                if event.seq > since:
                    events.append(event)
        return events

    def load_run(self, run_id: str) -> RunRecord:
        events = self.read_events(run_id)
        if not events:
            raise StoreError(f"run {run_id} has an empty event log")

        def read_text(rel_path: str) -> str:
            return self.read_artifact(run_id, rel_path)

        return fold_events(events, read_text)

    def list_runs(self, status: RunStatus | None = None) -> list[RunRecord]:
        """All runs, newest first; optionally filtered by status."""
        records = []
        for entry in self.root.iterdir():
            if not entry.is_dir() or not (entry / EVENTS_FILENAME).exists():
                continue
            try:
                record = self.load_run(entry.name)
            except StoreError:
                log.warning("skipping unreadable run %s", entry.name)
                continue
            if status is None or record.status is status:
                records.append(record)
        records.sort(key=lambda r: r.created_at, reverse=True)
        return records

    # -- artifacts -----------------------------------------------------------

    def write_artifact(self, run_id: str, name: str, data: bytes | str) -> str:
        """Store a file under the run directory; returns the relative name."""
        _check_artifact_name(name)
        path = self.run_dir(run_id) / name
        path.parent.mkdir(parents=True, exist_ok=True)
        if isinstance(data, str):
            path.write_text(data, encoding="utf-8")
        else:
            path.write_bytes(data)
        return name

    def read_artifact(self, run_id: str, name: str) -> str:
        _check_artifact_name(name)
        path = self.run_dir(run_id) / name
        if not path.exists():
            raise StoreError(f"run {run_id}: missing artifact {name!r}")
        return path.read_text(encoding="utf-8")

    def artifact_abspath(self, run_id: str, name: str) -> Path:
        _check_artifact_name(name)
        path = (self.run_dir(run_id) / name).resolve()
        run_root = self.run_dir(run_id).resolve()
        if not path.is_relative_to(run_root):
            raise StoreError(f"illegal artifact name {name!r}")
        return path
