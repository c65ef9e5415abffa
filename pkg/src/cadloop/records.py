"""Run records, run events, and the fold that rebuilds records from events.

The live pipeline and ``store.load_run`` both build records by applying
events through :func:`apply_event`, so a replayed log reconstructs the exact
record the pipeline returned.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Any, Callable, Iterable

from .config import PipelineConfig
from .errors import ContractError, StoreError
from .executor import (
    Dialect,
    ErrorClass,
    ExecutionResult,
    MacroDocument,
    Outcome,
    RenderArtifact,
    RenderKind,
)
from .scoring import Caption, CaptionSource, Score, ScoreBackend

EVENT_SCHEMA_VERSION = 1

ReadText = Callable[[str], str]


class RunStatus(str, Enum):
    RUNNING = "running"
    AWAITING_FEEDBACK = "awaiting_feedback"
    SUCCESS = "success"
    FAILURE = "failure"
    ABORTED = "aborted"


TERMINAL_STATUSES = (RunStatus.SUCCESS, RunStatus.FAILURE, RunStatus.ABORTED)


class FailureKind(str, Enum):
    NON_EXECUTABLE = "non_executable"
    WRONG_STRUCTURE = "wrong_structure"


class EventKind(str, Enum):
    RUN_STARTED = "run_started"
    PLAN_GENERATED = "plan_generated"
    MACRO_GENERATED = "macro_generated"
    EXECUTION_FINISHED = "execution_finished"
    RENDER_CAPTURED = "render_captured"
    SCORED = "scored"
    CAPTION_REQUESTED = "caption_requested"
    CAPTION_DECIDED = "caption_decided"
    REFINED = "refined"
    VERDICT_RECORDED = "verdict_recorded"
    RUN_FINISHED = "run_finished"


@dataclass(frozen=True)
class RunEvent:
    run_id: str
    seq: int
    at: str
    kind: EventKind
    payload: dict[str, Any]
    v: int = EVENT_SCHEMA_VERSION

    def to_dict(self) -> dict[str, Any]:
        return {
            "v": self.v,
            "run_id": self.run_id,
            "seq": self.seq,
            "at": self.at,
            "kind": self.kind.value,
            "payload": self.payload,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunEvent":
        return cls(
            run_id=data["run_id"],
            seq=data["seq"],
            at=data["at"],
            kind=EventKind(data["kind"]),
            payload=data.get("payload", {}),
            v=data.get("v", EVENT_SCHEMA_VERSION),
        )


@dataclass
class Verdict:
    auto_pass: bool
    human_success: bool | None = None
    decided_at: datetime | None = None


@dataclass
class Attempt:
    """One macro generation plus its error-refined versions and outcomes.

    ``execution``, ``render``, ``caption``, and ``score`` always describe the
    last entry of ``macro_versions``.
    """

    index: int
    macro_versions: list[MacroDocument] = field(default_factory=list)
    plan_text: str = ""
    execution: ExecutionResult | None = None
    render: RenderArtifact | None = None
    caption: Caption | None = None
    score: Score | None = None


@dataclass
class RunRecord:
    run_id: str
    query: str
    created_at: datetime
    config: PipelineConfig
    attempts: list[Attempt] = field(default_factory=list)
    status: RunStatus = RunStatus.RUNNING
    failure_kind: FailureKind | None = None
    verdict: Verdict | None = None
    abort_cause: str | None = None
    _pending_plan: str | None = field(default=None, compare=False, repr=False)

    @property
    def terminal(self) -> bool:
        return self.status in TERMINAL_STATUSES

    def last_attempt(self) -> Attempt:
        if not self.attempts:
            raise ContractError("run has no attempts yet")
        return self.attempts[-1]


def _caption_from(payload: dict[str, Any]) -> Caption:
    return Caption(text=payload["text"], source=CaptionSource(payload["source"]))


def caption_to_payload(caption: Caption) -> dict[str, Any]:
    return {"text": caption.text, "source": caption.source.value}


def apply_event(record: RunRecord | None, event: RunEvent, read_text: ReadText) -> RunRecord:
    """Fold one event into the record; run_started creates it.

    ``read_text`` resolves macro artifact paths (relative to the run's
    directory) back into macro text.
    """
    kind = event.kind
    payload = event.payload

    if kind is EventKind.RUN_STARTED:
        if record is not None:
            raise StoreError("run_started on an already-started record")
        return RunRecord(
            run_id=event.run_id,
            query=payload["query"],
            created_at=datetime.fromisoformat(payload["created_at"]),
            config=PipelineConfig.from_dict(payload["config"]),
        )
    if record is None:
        raise StoreError(f"event {kind.value} before run_started")

    if kind is EventKind.PLAN_GENERATED:
        record._pending_plan = payload["plan"]
    elif kind in (EventKind.MACRO_GENERATED, EventKind.REFINED):
        attempt_index = payload["attempt"]
        version = payload["version"]
        macro = MacroDocument(
            text=read_text(payload["macro_path"]),
            dialect=Dialect(payload["dialect"]),
            version_index=version,
        )
        if version == 0:
            attempt = Attempt(index=attempt_index)
            if record._pending_plan is not None:
                attempt.plan_text = record._pending_plan
                record._pending_plan = None
            record.attempts.append(attempt)
        else:
            attempt = record.last_attempt()
            # A new version supersedes the previous one's outcome fields.
            attempt.execution = None
            attempt.render = None
            attempt.score = None
        attempt.macro_versions.append(macro)
    elif kind is EventKind.EXECUTION_FINISHED:
        attempt = record.last_attempt()
        attempt.execution = ExecutionResult(
            outcome=Outcome(payload["outcome"]),
            error_message=payload.get("error_message"),
            error_class=ErrorClass(payload["error_class"]) if payload.get("error_class") else None,
            duration=payload["duration"],
        )
    elif kind is EventKind.RENDER_CAPTURED:
        attempt = record.last_attempt()
        attempt.render = RenderArtifact(
            kind=RenderKind(payload["kind"]),
            path_or_hash=payload["path_or_hash"],
            view=payload.get("view", "isometric"),
        )
    elif kind is EventKind.SCORED:
        attempt = record.last_attempt()
        attempt.score = Score(value=payload["value"], backend=ScoreBackend(payload["backend"]))
    elif kind is EventKind.CAPTION_REQUESTED:
        record.status = RunStatus.AWAITING_FEEDBACK
    elif kind is EventKind.CAPTION_DECIDED:
        attempt = record.last_attempt()
        attempt.caption = _caption_from(payload["caption"])
        record.status = RunStatus.RUNNING
    elif kind is EventKind.VERDICT_RECORDED:
        if record.verdict is None:
            record.verdict = Verdict(auto_pass=False)
        record.verdict.human_success = payload["human_success"]
        record.verdict.decided_at = datetime.fromisoformat(payload["decided_at"])
    elif kind is EventKind.RUN_FINISHED:
        record.status = RunStatus(payload["status"])
        record.failure_kind = FailureKind(payload["failure_kind"]) if payload.get("failure_kind") else None
        record.abort_cause = payload.get("cause")
        record.verdict = Verdict(auto_pass=payload["auto_pass"])
    else:
        raise StoreError(f"unknown event kind {kind}")
    return record


def fold_events(events: Iterable[RunEvent], read_text: ReadText) -> RunRecord:
    record: RunRecord | None = None
    for event in events:
        record = apply_event(record, event, read_text)
    if record is None:
        raise StoreError("no events to fold")
    return record


def record_to_dict(record: RunRecord, include_macros: bool = True) -> dict[str, Any]:
    """JSON-friendly snapshot used by the API and CLI."""

    def attempt_dict(a: Attempt) -> dict[str, Any]:
        d: dict[str, Any] = {
            "index": a.index,
            "plan_text": a.plan_text,
            "macro_versions": [
                {
                    "version_index": m.version_index,
                    "dialect": m.dialect.value,
                    **({"text": m.text} if include_macros else {}),
                }
                for m in a.macro_versions
            ],
            "execution": None,
            "render": None,
            "caption": None,
            "score": None,
        }
        if a.execution:
            d["execution"] = {
                "outcome": a.execution.outcome.value,
                "error_message": a.execution.error_message,
                "error_class": a.execution.error_class.value if a.execution.error_class else None,
                "duration": a.execution.duration,
            }
        if a.render:
            d["render"] = {
                "kind": a.render.kind.value,
                "path_or_hash": a.render.path_or_hash,
                "view": a.render.view,
            }
        if a.caption:
            d["caption"] = caption_to_payload(a.caption)
        if a.score:
            d["score"] = {"value": a.score.value, "backend": a.score.backend.value}
        return d

    return {
        "run_id": record.run_id,
        "query": record.query,
        "created_at": record.created_at.isoformat(),
        "config": record.config.to_dict(),
        "status": record.status.value,
        "failure_kind": record.failure_kind.value if record.failure_kind else None,
        "abort_cause": record.abort_cause,
        "verdict": None
        if record.verdict is None
        else {
            "auto_pass": record.verdict.auto_pass,
            "human_success": record.verdict.human_success,
            "decided_at": record.verdict.decided_at.isoformat() if record.verdict.decided_at else None,
        },
        "attempts": [attempt_dict(a) for a in record.attempts],
    }
