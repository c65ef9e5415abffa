"""Event log sequencing, sealing, folding, and artifact handling."""

from datetime import datetime, timezone

import pytest

from cadloop.config import PipelineConfig
from cadloop.errors import RunNotFoundError, SequenceError, StoreError
from cadloop.records import EventKind, RunEvent, RunStatus
from cadloop.store import EventStore, new_run_id

NOW = datetime(2026, 3, 1, 12, 0, 0, tzinfo=timezone.utc).isoformat()


def make_event(run_id, seq, kind, payload):
    return RunEvent(run_id=run_id, seq=seq, at=NOW, kind=kind, payload=payload)


def started(run_id, seq=1, query="a cube"):
    return make_event(run_id, seq, EventKind.RUN_STARTED, {
        "query": query,
        "created_at": NOW,
        "config": PipelineConfig().to_dict(),
    })


def finished(run_id, seq, status="success", auto_pass=True):
    return make_event(run_id, seq, EventKind.RUN_FINISHED, {
        "status": status,
        "failure_kind": None,
        "cause": None,
        "auto_pass": auto_pass,
    })


def macro_generated(store, run_id, seq, attempt=0, version=0, text="box b 10 10 10"):
    path = f"attempt-{attempt}/macro-v{version}.txt"
    store.write_artifact(run_id, path, text)
    return make_event(run_id, seq, EventKind.MACRO_GENERATED, {
        "attempt": attempt,
        "version": version,
        "macro_path": path,
        "dialect": "mock",
    })


@pytest.fixture
def store(tmp_path):
    return EventStore(tmp_path / "runs", durable=False)


def test_new_run_id_shape():
    ids = {new_run_id() for _ in range(50)}
    assert len(ids) == 50
    assert all(len(i) == 12 and all(c in "0123456789abcdef" for c in i) for i in ids)


def test_first_event_must_be_seq_one(store):
    run_id = new_run_id()
    with pytest.raises(SequenceError, match="expected seq 1, got 5"):
        store.append(started(run_id, seq=5))
    store.append(started(run_id, seq=1))
    assert store.next_seq(run_id) == 2


def test_gap_rejected(store):
    run_id = new_run_id()
    store.append(started(run_id))
    with pytest.raises(SequenceError, match="expected seq 2, got 3"):
        store.append(finished(run_id, seq=3))


def test_duplicate_seq_rejected(store):
    run_id = new_run_id()
    store.append(started(run_id))
    with pytest.raises(SequenceError):
        store.append(started(run_id, seq=1))


def test_sealed_after_run_finished(store):
    run_id = new_run_id()
    store.append(started(run_id))
    store.append(finished(run_id, seq=2))
    with pytest.raises(SequenceError, match="only verdict_recorded"):
        store.append(make_event(run_id, 3, EventKind.SCORED, {"value": 1.0, "backend": "stub"}))


def test_verdict_allowed_after_sealing(store):
    run_id = new_run_id()
    store.append(started(run_id))
    store.append(finished(run_id, seq=2))
    store.append(make_event(run_id, 3, EventKind.VERDICT_RECORDED,
                            {"human_success": False, "decided_at": NOW}))
    record = store.load_run(run_id)
    assert record.verdict.human_success is False
    # And verdicts can be revised; the fold keeps the latest.
    store.append(make_event(run_id, 4, EventKind.VERDICT_RECORDED,
                            {"human_success": True, "decided_at": NOW}))
    assert store.load_run(run_id).verdict.human_success is True


def test_read_events_since(store):
    run_id = new_run_id()
    store.append(started(run_id))
    store.append(macro_generated(store, run_id, seq=2))
    store.append(finished(run_id, seq=3))
    assert [e.seq for e in store.read_events(run_id)] == [1, 2, 3]
    assert [e.seq for e in store.read_events(run_id, since=0)] == [1, 2, 3]
    assert [e.seq for e in store.read_events(run_id, since=2)] == [3]
    assert store.read_events(run_id, since=3) == []


def test_read_events_unknown_run(store):
    with pytest.raises(RunNotFoundError):
        store.read_events("nope")


def test_load_run_folds(store):
    run_id = new_run_id()
    store.append(started(run_id, query="two boxes"))
    store.append(macro_generated(store, run_id, seq=2, text="box b 2 3 4"))
    store.append(finished(run_id, seq=3))
    record = store.load_run(run_id)
    assert record.run_id == run_id
    assert record.query == "two boxes"
    assert record.status is RunStatus.SUCCESS
    assert len(record.attempts) == 1
    assert record.attempts[0].macro_versions[0].text == "box b 2 3 4"
    assert record.verdict.auto_pass is True


def test_corrupt_line_reports_line_number(store):
    run_id = new_run_id()
    store.append(started(run_id))
    events_path = store.run_dir(run_id) / "events.jsonl"
    with open(events_path, "a") as fh:
        fh.write("{this is not json\n")
    with pytest.raises(StoreError, match="line 2"):
        store.read_events(run_id)


def test_missing_field_is_corrupt(store):
    run_id = new_run_id()
    store.append(started(run_id))
    events_path = store.run_dir(run_id) / "events.jsonl"
    with open(events_path, "a") as fh:
        fh.write('{"v": 1, "run_id": "x", "seq": 2}\n')
    with pytest.raises(StoreError, match="corrupt event at line 2"):
        store.read_events(run_id)


def test_list_runs_newest_first_and_filter(store):
    ids = []
    for i, status in enumerate(["success", "failure", "success"]):
        run_id = f"run-{i:02d}"
        ids.append(run_id)
        start = make_event(run_id, 1, EventKind.RUN_STARTED, {
            "query": "q",
            "created_at": datetime(2026, 3, 1, 12, i, tzinfo=timezone.utc).isoformat(),
            "config": PipelineConfig().to_dict(),
        })
        store.append(start)
        store.append(finished(run_id, seq=2, status=status, auto_pass=status == "success"))
    all_runs = store.list_runs()
    assert [r.run_id for r in all_runs] == ["run-02", "run-01", "run-00"]
    successes = store.list_runs(status=RunStatus.SUCCESS)
    assert [r.run_id for r in successes] == ["run-02", "run-00"]
    assert store.list_runs(status=RunStatus.ABORTED) == []


def test_list_runs_skips_unreadable(store):
    run_id = new_run_id()
    store.append(started(run_id))
    store.append(finished(run_id, seq=2))
    bad_dir = store.root / "bad-run"
    bad_dir.mkdir()
    (bad_dir / "events.jsonl").write_text("garbage\n")
    (store.root / "not-a-run.txt").write_text("ignore me")
    runs = store.list_runs()
    assert [r.run_id for r in runs] == [run_id]


def test_artifact_round_trip(store):
    run_id = new_run_id()
    name = store.write_artifact(run_id, "attempt-0/macro-v0.txt", "box b 1 1 1")
    assert name == "attempt-0/macro-v0.txt"
    assert store.read_artifact(run_id, name) == "box b 1 1 1"
    abspath = store.artifact_abspath(run_id, name)
    assert abspath.is_file()
    assert abspath.is_relative_to(store.run_dir(run_id).resolve())


def test_artifact_bytes(store):
    run_id = new_run_id()
    store.write_artifact(run_id, "attempt-0/render.png", b"\x89PNG fake")
    path = store.artifact_abspath(run_id, "attempt-0/render.png")
    assert path.read_bytes() == b"\x89PNG fake"


def test_artifact_missing(store):
    with pytest.raises(StoreError, match="missing artifact"):
        store.read_artifact("some-run", "attempt-0/render.png")


@pytest.mark.parametrize("name", [
    "../outside.txt",
    "attempt-0/../../escape.txt",
    "/etc/passwd",
])
def test_artifact_traversal_rejected(store, name):
    run_id = new_run_id()
    with pytest.raises(StoreError, match="illegal artifact name"):
        store.write_artifact(run_id, name, "data")
    with pytest.raises(StoreError, match="illegal artifact name"):
        store.read_artifact(run_id, name)
    with pytest.raises(StoreError, match="illegal artifact name"):
        store.artifact_abspath(run_id, name)


def test_load_run_empty_log(store):
    run_id = new_run_id()
    run_dir = store.run_dir(run_id)
    run_dir.mkdir(parents=True)
    (run_dir / "events.jsonl").write_text("")
    with pytest.raises(StoreError, match="empty event log"):
        store.load_run(run_id)


def test_durable_append_persists(tmp_path):
    store = EventStore(tmp_path / "runs", durable=True)
    run_id = new_run_id()
    store.append(started(run_id))
    reopened = EventStore(tmp_path / "runs", durable=True)
    assert [e.kind for e in reopened.read_events(run_id)] == [EventKind.RUN_STARTED]


def test_concurrent_appends_stay_sequential(store):
    import threading

    run_id = new_run_id()
    store.append(started(run_id))
    errors = []

    def worker():
        for _ in range(25):
            while True:
                seq = store.next_seq(run_id)
                event = make_event(run_id, seq, EventKind.PLAN_GENERATED, {"plan": "p"})
                try:
                    store.append(event)
                    break
                except SequenceError:
                    continue  # lost the race, re-read the tail

    threads = [threading.Thread(target=worker) for _ in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors
    seqs = [e.seq for e in store.read_events(run_id)]
    assert seqs == list(range(1, 102))
