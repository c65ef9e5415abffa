"""Caption arbitration, mailbox handoff, and human verdicts."""

import threading
import time
from datetime import datetime, timedelta, timezone

import pytest

from cadloop.config import FeedbackMode, PipelineConfig
from cadloop.errors import ContractError, StoreError
from cadloop.feedback import (
    CaptionDecision,
    DecidedBy,
    FeedbackBroker,
    Mailbox,
    arbitrate,
    caption_deadline,
    record_verdict,
)
from cadloop.records import RunStatus
from cadloop.scoring import Caption, CaptionSource

from conftest import build_pipeline, response_with


# --- arbitration -----------------------------------------------------------

def test_auto_mode_takes_machine_caption():
    decision = arbitrate("a box of 10x10x10 mm", FeedbackMode.AUTO, None, timeout=0.0)
    assert decision.decided_by is DecidedBy.AUTO_MODE
    assert decision.caption.text == "a box of 10x10x10 mm"
    assert decision.caption.source is CaptionSource.MACHINE


def test_interactive_human_override():
    mailbox = Mailbox()
    mailbox.put("actually a sphere")
    decision = arbitrate("a box", FeedbackMode.INTERACTIVE, mailbox, timeout=1.0)
    assert decision.decided_by is DecidedBy.HUMAN
    assert decision.caption.text == "actually a sphere"
    assert decision.caption.source is CaptionSource.HUMAN


def test_interactive_timeout_falls_back():
    decision = arbitrate("a box", FeedbackMode.INTERACTIVE, Mailbox(), timeout=0.01)
    assert decision.decided_by is DecidedBy.TIMEOUT_FALLBACK
    assert decision.caption.text == "a box"
    assert decision.caption.source is CaptionSource.MACHINE


def test_interactive_blank_submission_falls_back():
    mailbox = Mailbox()
    mailbox.put("   ")
    decision = arbitrate("a box", FeedbackMode.INTERACTIVE, mailbox, timeout=1.0)
    assert decision.decided_by is DecidedBy.TIMEOUT_FALLBACK


def test_interactive_submission_is_stripped():
    mailbox = Mailbox()
    mailbox.put("  a tall cylinder \n")
    decision = arbitrate("a box", FeedbackMode.INTERACTIVE, mailbox, timeout=1.0)
    assert decision.caption.text == "a tall cylinder"


def test_interactive_requires_mailbox():
    with pytest.raises(ContractError):
        arbitrate("a box", FeedbackMode.INTERACTIVE, None, timeout=1.0)


def test_closed_mailbox_falls_back():
    mailbox = Mailbox()
    mailbox.close()
    decision = arbitrate("a box", FeedbackMode.INTERACTIVE, mailbox, timeout=5.0)
    assert decision.decided_by is DecidedBy.TIMEOUT_FALLBACK


def test_human_decision_requires_human_source():
    with pytest.raises(ContractError):
        CaptionDecision(
            caption=Caption(text="x", source=CaptionSource.MACHINE),
            decided_by=DecidedBy.HUMAN,
        )


def test_caption_deadline():
    issued = datetime(2026, 3, 1, 12, 0, tzinfo=timezone.utc)
    assert caption_deadline(issued, 120.0) == issued + timedelta(seconds=120)


# --- mailbox ---------------------------------------------------------------

def test_mailbox_take_timeout_returns_none():
    assert Mailbox().take(timeout=0.01) is None


def test_mailbox_close_unblocks_waiter():
    mailbox = Mailbox()
    results = []

    def waiter():
        results.append(mailbox.take(timeout=10.0))

    thread = threading.Thread(target=waiter)
    thread.start()
    time.sleep(0.05)
    start = time.monotonic()
    mailbox.close()
    thread.join(timeout=2.0)
    assert not thread.is_alive()
    assert time.monotonic() - start < 2.0
    # The waiter gets either None (closed flag seen) or the sentinel poke;
    # both read as "no usable submission" to arbitrate().
    assert results[0] in (None, "")


def test_mailbox_take_after_close_is_none():
    mailbox = Mailbox()
    mailbox.put("queued before close")
    mailbox.close()
    assert mailbox.take(timeout=0.5) is None
    assert mailbox.closed


# --- broker ----------------------------------------------------------------

def test_broker_deliver_and_release():
    broker = FeedbackBroker()
    mailbox = broker.register("run-1")
    assert broker.get("run-1") is mailbox
    assert broker.deliver("run-1", "a caption") is True
    assert mailbox.take(timeout=0.5) == "a caption"
    broker.release("run-1")
    assert broker.get("run-1") is None
    assert mailbox.closed
    assert broker.deliver("run-1", "too late") is False


def test_broker_deliver_unknown_run():
    assert FeedbackBroker().deliver("ghost", "text") is False


def test_broker_register_existing_mailbox():
    broker = FeedbackBroker()
    mine = Mailbox()
    assert broker.register("run-2", mine) is mine
    assert broker.get("run-2") is mine


def test_broker_deliver_to_closed_mailbox():
    broker = FeedbackBroker()
    mailbox = broker.register("run-3")
    mailbox.close()
    assert broker.deliver("run-3", "text") is False


# --- verdicts --------------------------------------------------------------

def finished_run(tmp_path, subdir="runs"):
    pipeline, store = build_pipeline(
        tmp_path, [response_with("box b 10 10 10")], subdir=subdir)
    record = pipeline.run_query("a cube", PipelineConfig())
    assert record.status is RunStatus.SUCCESS
    return record, store


def test_record_verdict_appends(tmp_path):
    record, store = finished_run(tmp_path)
    record_verdict(store, record.run_id, human_success=False)
    reloaded = store.load_run(record.run_id)
    assert reloaded.verdict.auto_pass is True
    assert reloaded.verdict.human_success is False
    assert reloaded.verdict.decided_at is not None


def test_record_verdict_flip_flop_keeps_latest(tmp_path):
    record, store = finished_run(tmp_path)
    record_verdict(store, record.run_id, human_success=False)
    record_verdict(store, record.run_id, human_success=True)
    events = store.read_events(record.run_id)
    verdicts = [e for e in events if e.kind.value == "verdict_recorded"]
    assert len(verdicts) == 2
    assert store.load_run(record.run_id).verdict.human_success is True


def test_record_verdict_rejects_running(tmp_path):
    pipeline, store = build_pipeline(tmp_path, [response_with("box b 10 10 10")])
    run_id = pipeline.begin("a cube", PipelineConfig())
    with pytest.raises(StoreError, match="still running"):
        record_verdict(store, run_id, human_success=True)


def test_record_verdict_rejects_aborted(tmp_path):
    # An exhausted replay script aborts the run.
    pipeline, store = build_pipeline(tmp_path, [])
    record = pipeline.run_query("a cube", PipelineConfig())
    assert record.status is RunStatus.ABORTED
    with pytest.raises(StoreError, match="aborted"):
        record_verdict(store, record.run_id, human_success=True)
