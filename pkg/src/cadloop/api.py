"""HTTP surface for launching runs, streaming events, and human feedback."""

from __future__ import annotations

import hmac
import logging
import threading
import time
from pathlib import Path
from typing import Any, Callable

from fastapi import Depends, FastAPI, HTTPException, Request, Response
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .config import PipelineConfig
from .errors import ConfigError, RunNotFoundError, StoreError
from .feedback import FeedbackBroker, Mailbox, record_verdict
from .pipeline import Pipeline
from .records import RunStatus, record_to_dict
from .store import EventStore

log = logging.getLogger(__name__)

DEFAULT_LONG_POLL_WINDOW = 25.0

PipelineFactory = Callable[[Mailbox], Pipeline]

_CONTENT_TYPES = {
    ".png": "image/png",
    ".json": "application/json",
    ".jsonl": "application/x-ndjson",
    ".txt": "text/plain; charset=utf-8",
    ".md": "text/markdown; charset=utf-8",
    ".csv": "text/csv; charset=utf-8",
}


class RunRequest(BaseModel):
    query: str
    config_overrides: dict[str, Any] | None = None


class CaptionBody(BaseModel):
    caption: str


class VerdictBody(BaseModel):
    success: bool


class RunLauncher:
    """Builds a pipeline per run and drives it on a background thread."""

    def __init__(self, store: EventStore, factory: PipelineFactory, broker: FeedbackBroker):
        self.store = store
        self.factory = factory
        self.broker = broker
        self._threads: dict[str, threading.Thread] = {}

    def launch(self, query: str, config: PipelineConfig) -> str:
        mailbox = Mailbox()
        pipeline = self.factory(mailbox)
        run_id = pipeline.begin(query, config)
        self.broker.register(run_id, mailbox)

        def drive() -> None:
            try:
                pipeline.drive()
            finally:
                self.broker.release(run_id)

        thread = threading.Thread(target=drive, name=f"run-{run_id}", daemon=True)
        self._threads[run_id] = thread
        thread.start()
        return run_id

    def wait(self, run_id: str, timeout: float = 30.0) -> None:
        thread = self._threads.get(run_id)
        if thread is not None:
            thread.join(timeout)


def create_app(
    store: EventStore,
    pipeline_factory: PipelineFactory,
    base_config: PipelineConfig | None = None,
    token: str | None = None,
    static_dir: str | Path | None = None,
    reports_dir: str | Path | None = None,
    long_poll_window: float = DEFAULT_LONG_POLL_WINDOW,
    poll_interval: float = 0.05,
) -> FastAPI:
    base_config = base_config or PipelineConfig()
    broker = FeedbackBroker()
    launcher = RunLauncher(store, pipeline_factory, broker)
    app = FastAPI(title="cadloop", version="1.0")
    app.state.launcher = launcher
    app.state.broker = broker
    app.state.store = store

    def require_token(request: Request) -> None:
        if token is None:
            return
        supplied = request.headers.get("authorization", "")
        expected = f"Bearer {token}"
        if not hmac.compare_digest(supplied, expected):
            raise HTTPException(status_code=401, detail="missing or invalid token")

    def load_or_404(run_id: str):
        try:
            return store.load_run(run_id)
        except RunNotFoundError:
            raise HTTPException(status_code=404, detail=f"no such run {run_id!r}") from None

    @app.post("/v1/runs", status_code=202, dependencies=[Depends(require_token)])
    def start_run(body: RunRequest) -> dict[str, str]:
        if not body.query.strip():
            raise HTTPException(status_code=400, detail="query must be non-empty")
        try:
            config = (
                base_config.with_overrides(**body.config_overrides)
                if body.config_overrides
                else base_config
            )
        except ConfigError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        run_id = launcher.launch(body.query, config)
        return {"run_id": run_id}

    @app.get("/v1/runs")
    def list_runs(status: str | None = None) -> dict[str, list[dict[str, Any]]]:
        status_filter = None
        if status is not None:
            try:
                status_filter = RunStatus(status)
            except ValueError:
                raise HTTPException(status_code=400, detail=f"unknown status {status!r}") from None
        summaries = [
            {
                "run_id": r.run_id,
                "query": r.query,
                "status": r.status.value,
                "created_at": r.created_at.isoformat(),
            }
            for r in store.list_runs(status_filter)
        ]
        return {"runs": summaries}

    @app.get("/v1/runs/{run_id}")
    def run_snapshot(run_id: str) -> dict[str, Any]:
        return record_to_dict(load_or_404(run_id))

    @app.get("/v1/runs/{run_id}/events")
    def run_events(run_id: str, since: int = 0) -> dict[str, Any]:
        deadline = time.monotonic() + long_poll_window
        while True:
            try:
                events = store.read_events(run_id, since=since)
            except RunNotFoundError:
                raise HTTPException(status_code=404, detail=f"no such run {run_id!r}") from None
            if events or time.monotonic() >= deadline:
                return {"events": [e.to_dict() for e in events]}
            time.sleep(poll_interval)

    @app.post("/v1/runs/{run_id}/caption", status_code=204, dependencies=[Depends(require_token)])
    def submit_caption(run_id: str, body: CaptionBody) -> Response:
        if not body.caption.strip():
            raise HTTPException(status_code=400, detail="caption must be non-empty")
        record = load_or_404(run_id)
        if record.status is not RunStatus.AWAITING_FEEDBACK:
            raise HTTPException(
                status_code=409,
                detail=f"run is {record.status.value}, not awaiting feedback",
            )
        if not broker.deliver(run_id, body.caption):
            raise HTTPException(status_code=409, detail="feedback window closed")
        return Response(status_code=204)

    @app.post("/v1/runs/{run_id}/verdict", status_code=204, dependencies=[Depends(require_token)])
    def submit_verdict(run_id: str, body: VerdictBody) -> Response:
        load_or_404(run_id)
        try:
            record_verdict(store, run_id, body.success)
        except StoreError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        return Response(status_code=204)

    @app.get("/v1/runs/{run_id}/artifacts/{name:path}")
    def get_artifact(run_id: str, name: str) -> FileResponse:
        load_or_404(run_id)
        try:
            path = store.artifact_abspath(run_id, name)
        except StoreError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        if not path.is_file():
            raise HTTPException(status_code=404, detail=f"no artifact {name!r}")
        media_type = _CONTENT_TYPES.get(path.suffix, "application/octet-stream")
        return FileResponse(path, media_type=media_type)

    @app.exception_handler(StoreError)
    def store_error_handler(request: Request, exc: StoreError) -> JSONResponse:
        log.error("store error: %s", exc)
        return JSONResponse(status_code=500, content={"detail": str(exc)})

    if reports_dir is not None and Path(reports_dir).is_dir():
        app.mount("/reports", StaticFiles(directory=str(reports_dir)), name="reports")
    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")
    return app
