"""The generate/execute/score/refine loop, expressed as a pure decision
function plus an effectful driver that appends and folds events.

``next_action`` looks only at the run record, so the loop is trivially
replayable: the driver applies every event it appends through the same fold
the store uses when loading a run back from disk.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Union

from .config import FeedbackMode, PipelineConfig
from .errors import CadLoopError, CaptionError, ContractError
from .executor import DEFAULT_EXECUTION_TIMEOUT, Executor, MacroDocument
from .feedback import Mailbox, arbitrate
from .llm import LlmClient, MacroGeneration
from .records import (
    Attempt,
    EventKind,
    FailureKind,
    RunEvent,
    RunRecord,
    RunStatus,
    apply_event,
    caption_to_payload,
)
from .scoring import RemoteScorer, StubScorer
from .store import EventStore, new_run_id

log = logging.getLogger(__name__)

Scorer = Union[StubScorer, RemoteScorer]


@dataclass(frozen=True)
class GenerateInitial:
    pass


@dataclass(frozen=True)
class Execute:
    pass


@dataclass(frozen=True)
class ScoreRender:
    pass


@dataclass(frozen=True)
class RequestCaption:
    pass


@dataclass(frozen=True)
class ErrorRefine:
    pass


@dataclass(frozen=True)
class ModelRefine:
    pass


@dataclass(frozen=True)
class Finish:
    status: RunStatus
    failure_kind: FailureKind | None = None


Action = Union[
    GenerateInitial, Execute, ScoreRender, RequestCaption, ErrorRefine, ModelRefine, Finish
]


def stopping_criterion(score: float, threshold: float) -> bool:
    """True when the score strictly exceeds the threshold."""
    if not 0.0 <= score <= 1.0:
        raise ContractError(f"score must be within [0, 1], got {score}")
    return score > threshold


def next_action(record: RunRecord) -> Action:
    """Decide the next pipeline step from the record alone."""
    if record.terminal:
        raise ContractError(f"run {record.run_id} already finished ({record.status.value})")
    cfg = record.config
    if not record.attempts:
        return GenerateInitial()
    attempt = record.attempts[-1]
    if not attempt.macro_versions:
        raise ContractError("attempt exists without a macro version")
    if attempt.execution is None:
        return Execute()
    if not attempt.execution.ok:
        # Error-refinement budget: error_iter corrections per generation.
        if len(attempt.macro_versions) - 1 < cfg.error_iter:
            return ErrorRefine()
        if attempt.index >= cfg.model_iter:
            return Finish(RunStatus.FAILURE, FailureKind.NON_EXECUTABLE)
        if attempt.caption is None:
            return RequestCaption()
        return ModelRefine()
    if attempt.score is None:
        return ScoreRender()
    if stopping_criterion(attempt.score.value, cfg.threshold):
        return Finish(RunStatus.SUCCESS)
    if attempt.index >= cfg.model_iter:
        return Finish(RunStatus.FAILURE, FailureKind.WRONG_STRUCTURE)
    if attempt.caption is None:
        return RequestCaption()
    return ModelRefine()


def counts_as_success(record: RunRecord) -> bool:
    """Benchmark outcome with the human verdict dominating the auto result."""
    if record.status is RunStatus.ABORTED:
        return False
    if record.verdict is not None and record.verdict.human_success is not None:
        return record.verdict.human_success
    return record.status is RunStatus.SUCCESS


def classify_failure(record: RunRecord) -> FailureKind:
    """Failure kind for a run that counts as a failure.

    A run the loop passed but a human rejected still executed and rendered,
    so it lands in the wrong-structure bucket.
    """
    if counts_as_success(record):
        raise ContractError(f"run {record.run_id} counts as a success")
    if record.status is RunStatus.ABORTED:
        raise ContractError(f"run {record.run_id} was aborted; it has no failure kind")
    if record.status is RunStatus.SUCCESS:
        return FailureKind.WRONG_STRUCTURE
    if record.failure_kind is None:
        raise ContractError(f"failed run {record.run_id} lacks a failure kind")
    return record.failure_kind


FAILED_EXECUTION_CAPTION = "the macro failed to execute; last error: {error}"


class Pipeline:
    """Drives one run to completion against a store, an LLM, an executor,
    and a scorer."""

    def __init__(
        self,
        llm: LlmClient,
        executor: Executor,
        scorer: Scorer,
        store: EventStore,
        mailbox: Mailbox | None = None,
        execution_timeout: float = DEFAULT_EXECUTION_TIMEOUT,
    ):
        self.llm = llm
        self.executor = executor
        self.scorer = scorer
        self.store = store
        self.mailbox = mailbox
        self.execution_timeout = execution_timeout
        self.record: RunRecord | None = None
        self.run_id = ""
        self._seq = 1
        self._llm_calls = 0
        self._last_audit_path = ""
        if self.llm.audit is None:
            self.llm.audit = self._audit

    # -- plumbing ----------------------------------------------------------

    def _audit(self, kind: str, messages: list[dict[str, str]], raw: str) -> None:
        name = f"llm-audit/call-{self._llm_calls:03d}.json"
        self._llm_calls += 1
        self.store.write_artifact(
            self.run_id,
            name,
            json.dumps({"kind": kind, "messages": messages, "response": raw}, indent=2),
        )
        self._last_audit_path = name

    def _read_text(self, rel_path: str) -> str:
        return self.store.read_artifact(self.run_id, rel_path)

    @staticmethod
    def _now() -> str:
        return datetime.now(timezone.utc).isoformat()

    def _emit(self, kind: EventKind, payload: dict) -> None:
        event = RunEvent(run_id=self.run_id, seq=self._seq, at=self._now(), kind=kind, payload=payload)
        self.store.append(event)
        self._seq += 1
        self.record = apply_event(self.record, event, self._read_text)

    def _store_generation(self, gen: MacroGeneration, attempt: int, version: int) -> str:
        name = f"attempt-{attempt}/macro-v{version}.txt"
        self.store.write_artifact(self.run_id, name, gen.macro_text)
        return name

    def _emit_generation(
        self, gen: MacroGeneration, attempt: int, version: int, refine_kind: str | None
    ) -> None:
        if version == 0 and gen.plan_text:
            self._emit(EventKind.PLAN_GENERATED, {"attempt": attempt, "plan": gen.plan_text})
        macro_path = self._store_generation(gen, attempt, version)
        payload = {
            "attempt": attempt,
            "version": version,
            "dialect": self.executor.dialect.value,
            "macro_path": macro_path,
            "raw_path": self._last_audit_path,
        }
        if refine_kind is None:
            self._emit(EventKind.MACRO_GENERATED, payload)
        else:
            self._emit(EventKind.REFINED, {"kind": refine_kind, **payload})

    # -- lifecycle -----------------------------------------------------------

    def begin(self, query: str, config: PipelineConfig) -> str:
        """Open the run: allocate an id and append run_started synchronously."""
        if self.record is not None:
            raise ContractError("pipeline instances drive exactly one run")
        if not query or not query.strip():
            raise ContractError("query must be non-empty")
        self.run_id = new_run_id()
        self._emit(
            EventKind.RUN_STARTED,
            {"query": query, "config": config.to_dict(), "created_at": self._now()},
        )
        return self.run_id

    def drive(self) -> RunRecord:
        """Advance the run until it reaches a terminal status."""
        if self.record is None:
            raise ContractError("begin() must run first")
        try:
            while not self.record.terminal:
                action = next_action(self.record)
                self._dispatch(action)
        except CadLoopError as exc:
            log.error("run %s aborted: %s", self.run_id, exc)
            self._emit(
                EventKind.RUN_FINISHED,
                {"status": RunStatus.ABORTED.value, "auto_pass": False, "cause": str(exc)},
            )
        if self.mailbox is not None:
            self.mailbox.close()
        return self.record

    def run_query(self, query: str, config: PipelineConfig) -> RunRecord:
        self.begin(query, config)
        return self.drive()

    # -- handlers ------------------------------------------------------------

    def _dispatch(self, action: Action) -> None:
        record = self.record
        assert record is not None
        if isinstance(action, GenerateInitial):
            gen = self.llm.generate_initial(record.query)
            self._emit_generation(gen, attempt=0, version=0, refine_kind=None)
        elif isinstance(action, Execute):
            self._execute(record.last_attempt())
        elif isinstance(action, ScoreRender):
            self._score(record.last_attempt())
        elif isinstance(action, RequestCaption):
            self._request_caption(record.last_attempt())
        elif isinstance(action, ErrorRefine):
            attempt = record.last_attempt()
            failing = attempt.macro_versions[-1]
            assert attempt.execution is not None and attempt.execution.error_message
            gen = self.llm.refine_on_error(
                record.query, failing.text, attempt.execution.error_message
            )
            self._emit_generation(
                gen, attempt=attempt.index, version=len(attempt.macro_versions), refine_kind="error"
            )
        elif isinstance(action, ModelRefine):
            attempt = record.last_attempt()
            assert attempt.caption is not None
            gen = self.llm.refine_on_caption(
                record.query, attempt.macro_versions[-1].text, attempt.caption.text
            )
            self._emit_generation(gen, attempt=attempt.index + 1, version=0, refine_kind="model")
        elif isinstance(action, Finish):
            payload = {
                "status": action.status.value,
                "auto_pass": action.status is RunStatus.SUCCESS,
            }
            if action.failure_kind is not None:
                payload["failure_kind"] = action.failure_kind.value
            self._emit(EventKind.RUN_FINISHED, payload)
        else:
            raise ContractError(f"unhandled action {action!r}")

    def _execute(self, attempt: Attempt) -> None:
        macro: MacroDocument = attempt.macro_versions[-1]
        workdir = self.store.run_dir(self.run_id) / f"attempt-{attempt.index}"
        result, render = self.executor.execute(macro, workdir, timeout=self.execution_timeout)
        payload = {
            "attempt": attempt.index,
            "version": macro.version_index,
            "outcome": result.outcome.value,
            "duration": result.duration,
        }
        if result.error_message is not None:
            payload["error_message"] = result.error_message
        if result.error_class is not None:
            payload["error_class"] = result.error_class.value
        self._emit(EventKind.EXECUTION_FINISHED, payload)
        if render is not None:
            self._emit(
                EventKind.RENDER_CAPTURED,
                {
                    "attempt": attempt.index,
                    "version": macro.version_index,
                    "kind": render.kind.value,
                    "path_or_hash": render.path_or_hash,
                    "view": render.view,
                },
            )

    def _score(self, attempt: Attempt) -> None:
        assert self.record is not None
        if attempt.render is None:
            raise ContractError("cannot score an attempt without a render")
        score = self.scorer.vqa_score(attempt.render, self.record.query)
        self._emit(
            EventKind.SCORED,
            {
                "attempt": attempt.index,
                "version": attempt.macro_versions[-1].version_index,
                "value": score.value,
                "backend": score.backend.value,
            },
        )

    def _request_caption(self, attempt: Attempt) -> None:
        assert self.record is not None
        config = self.record.config
        interactive = config.feedback_mode is FeedbackMode.INTERACTIVE
        assert attempt.execution is not None
        if attempt.execution.ok:
            assert attempt.render is not None
            try:
                machine_caption = self.scorer.generate_caption(attempt.render).text
            except CaptionError:
                if not interactive:
                    raise
                # Leave the human a hook to describe the render themselves.
                machine_caption = "automatic captioning is unavailable for this render"
        else:
            machine_caption = FAILED_EXECUTION_CAPTION.format(
                error=attempt.execution.error_message
            )
        if interactive:
            issued_at = datetime.now(timezone.utc)
            deadline = issued_at.timestamp() + config.feedback_timeout
            self._emit(
                EventKind.CAPTION_REQUESTED,
                {
                    "attempt": attempt.index,
                    "machine_caption": machine_caption,
                    "issued_at": issued_at.isoformat(),
                    "deadline": datetime.fromtimestamp(deadline, timezone.utc).isoformat(),
                },
            )
        decision = arbitrate(
            machine_caption,
            config.feedback_mode,
            self.mailbox,
            config.feedback_timeout,
        )
        self._emit(
            EventKind.CAPTION_DECIDED,
            {
                "attempt": attempt.index,
                "caption": caption_to_payload(decision.caption),
                "decided_by": decision.decided_by.value,
            },
        )
