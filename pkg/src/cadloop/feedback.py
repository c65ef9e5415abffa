"""Human-in-the-loop caption feedback and post-run verdicts."""

from __future__ import annotations

import logging
import queue
import threading
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from enum import Enum

from .config import FeedbackMode
from .errors import ContractError, StoreError
from .records import EventKind, RunEvent, RunStatus
from .scoring import Caption, CaptionSource
from .store import EventStore

log = logging.getLogger(__name__)


class DecidedBy(str, Enum):
    HUMAN = "human"
    TIMEOUT_FALLBACK = "timeout_fallback"
    AUTO_MODE = "auto_mode"


@dataclass(frozen=True)
class CaptionRequest:
    run_id: str
    attempt_index: int
    machine_caption: str
    issued_at: datetime
    deadline: datetime


@dataclass(frozen=True)
class CaptionDecision:
    caption: Caption
    decided_by: DecidedBy

    def __post_init__(self) -> None:
        if self.decided_by is DecidedBy.HUMAN and self.caption.source is not CaptionSource.HUMAN:
            raise ContractError("human decision must carry a human-sourced caption")


class Mailbox:
    """Single-slot handoff from the API thread to a waiting pipeline."""

    def __init__(self) -> None:
        self._queue: queue.Queue[str] = queue.Queue()
        self._closed = threading.Event()

    def put(self, text: str) -> None:
        self._queue.put(text)

    def take(self, timeout: float) -> str | None:
        """Next submitted caption, or None on timeout or after close()."""
        if self._closed.is_set():
            return None
        try:
            return self._queue.get(timeout=timeout)
        except queue.Empty:
            return None

    def close(self) -> None:
        self._closed.set()
        # Unblock a waiting take() promptly rather than letting it ride out
        # the timeout; a sentinel would complicate typing, so poke the queue.
        self._queue.put("")

    @property
    def closed(self) -> bool:
        return self._closed.is_set()


class FeedbackBroker:
    """Registry of live mailboxes keyed by run id."""

    def __init__(self) -> None:
        self._mailboxes: dict[str, Mailbox] = {}
        self._lock = threading.Lock()

    def register(self, run_id: str, mailbox: Mailbox | None = None) -> Mailbox:
        with self._lock:
            mailbox = mailbox or Mailbox()
            self._mailboxes[run_id] = mailbox
            return mailbox

    def get(self, run_id: str) -> Mailbox | None:
        with self._lock:
            return self._mailboxes.get(run_id)

    def deliver(self, run_id: str, text: str) -> bool:
        mailbox = self.get(run_id)
        if mailbox is None or mailbox.closed:
            return False
        mailbox.put(text)
        return True

    def release(self, run_id: str) -> None:
        with self._lock:
            mailbox = self._mailboxes.pop(run_id, None)
        if mailbox is not None:
            mailbox.close()


def caption_deadline(issued_at: datetime, timeout: float) -> datetime:
    return issued_at + timedelta(seconds=timeout)


def arbitrate(
    machine_caption: str,
    mode: FeedbackMode,
    mailbox: Mailbox | None,
    timeout: float,
) -> CaptionDecision:
    """Pick the caption the refinement step will see.

    Auto mode takes the machine caption directly. Interactive mode waits up
    to ``timeout`` seconds for a human override; an empty submission, a
    timeout, or a closed mailbox all fall back to the machine caption.
    """
    if mode is FeedbackMode.AUTO:
        return CaptionDecision(
            caption=Caption(text=machine_caption, source=CaptionSource.MACHINE),
            decided_by=DecidedBy.AUTO_MODE,
        )
    if mailbox is None:
        raise ContractError("interactive mode requires a mailbox")
    submitted = mailbox.take(timeout)
    if submitted is not None and submitted.strip():
        return CaptionDecision(
            caption=Caption(text=submitted.strip(), source=CaptionSource.HUMAN),
            decided_by=DecidedBy.HUMAN,
        )
    return CaptionDecision(
        caption=Caption(text=machine_caption, source=CaptionSource.MACHINE),
        decided_by=DecidedBy.TIMEOUT_FALLBACK,
    )


def record_verdict(store: EventStore, run_id: str, human_success: bool) -> None:
    """Append a post-run human verdict to a finished run's log.

    Every submission appends an event, so flip-flops stay auditable; the
    fold keeps the latest value.
    """
    record = store.load_run(run_id)
    if not record.terminal:
        raise StoreError(f"run {run_id} is still {record.status.value}; verdicts need a finished run")
    if record.status is RunStatus.ABORTED:
        raise StoreError(f"run {run_id} was aborted; no verdict applies")
    event = RunEvent(
        run_id=run_id,
        seq=store.next_seq(run_id),
        at=datetime.now(timezone.utc).isoformat(),
        kind=EventKind.VERDICT_RECORDED,
        payload={
            "human_success": human_success,
            "decided_at": datetime.now(timezone.utc).isoformat(),
        },
    )
    store.append(event)
    log.info("run %s: human verdict %s", run_id, "success" if human_success else "failure")
