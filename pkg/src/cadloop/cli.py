"""Command-line entry points: run one query, run the benchmark, serve the API."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import threading
import time
from pathlib import Path

from .bench import (
    compute_metrics,
    default_dataset_path,
    emit_report,
    load_dataset,
    load_results,
    run_benchmark,
    write_results,
)
from .config import ExecutorKind, FeedbackMode, PipelineConfig
from .errors import CadLoopError
from .executor import FreeCadExecutor, MockExecutor
from .feedback import Mailbox
from .llm import (
    HttpChatProvider,
    LlmClient,
    ProviderKind,
    ProviderSpec,
    load_prompt_set,
    load_replay_script,
    replay_provider_for,
)
from .pipeline import Pipeline
from .records import EventKind, RunStatus
from .scene import SceneDescriptor
from .scoring import RemoteScorer, StubScorer
from .store import EventStore

log = logging.getLogger(__name__)

EXIT_SUCCESS = 0
EXIT_FAILURE = 1
EXIT_ABORTED = 2


def _add_provider_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--llm", choices=["replay", "http"], default="replay", help="LLM provider")
    parser.add_argument("--script", help="replay script path (required with --llm replay)")
    parser.add_argument("--script-key", default="", help="replay script run key")
    parser.add_argument("--endpoint", help="chat-completions endpoint (with --llm http)")
    parser.add_argument("--model", default="", help="model name for the HTTP provider")
    parser.add_argument(
        "--credential-env",
        default="CADLOOP_API_KEY",
        help="environment variable holding the API key",
    )
    parser.add_argument("--prompt-set", help="prompt set name or directory")


def _add_scorer_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scorer", choices=["stub", "remote"], default="stub")
    parser.add_argument("--sidecar", default="http://127.0.0.1:8800", help="scoring service URL")
    parser.add_argument("--expected-scene", help="scene JSON the stub scorer compares against")


def _build_provider(args: argparse.Namespace):
    if args.llm == "replay":
        if not args.script:
            raise SystemExit("--llm replay requires --script")
        script = load_replay_script(args.script)
        return replay_provider_for(script, args.script_key)
    if not args.endpoint:
        raise SystemExit("--llm http requires --endpoint")
    spec = ProviderSpec(
        kind=ProviderKind.HTTP_CHAT,
        endpoint=args.endpoint,
        model_name=args.model,
        credential=args.credential_env,
    )
    return HttpChatProvider(spec)


def _build_scorer(args: argparse.Namespace):
    if args.scorer == "remote":
        return RemoteScorer(base_url=args.sidecar)
    expected = None
    if args.expected_scene:
        expected = SceneDescriptor.from_dict(json.loads(Path(args.expected_scene).read_text()))
    return StubScorer(expected_scene=expected)


def _build_executor(kind: str, freecad_binary: str):
    if kind == "mock":
        return MockExecutor()
    return FreeCadExecutor(binary=freecad_binary)


def _build_config(args: argparse.Namespace) -> PipelineConfig:
    config = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    overrides = {}
    if args.threshold is not None:
        overrides["threshold"] = args.threshold
    if args.error_iter is not None:
        overrides["error_iter"] = args.error_iter
    if args.model_iter is not None:
        overrides["model_iter"] = args.model_iter
    if args.mode is not None:
        overrides["feedback_mode"] = args.mode
    if args.executor is not None:
        overrides["executor_kind"] = args.executor
    if getattr(args, "feedback_timeout", None) is not None:
        overrides["feedback_timeout"] = args.feedback_timeout
    return config.with_overrides(**overrides) if overrides else config


def _follow_events(store: EventStore, run_id: str, stop: threading.Event) -> None:
    """Print a progress line per event until the run finishes."""
    since = 0
    while not stop.is_set():
        try:
            events = store.read_events(run_id, since=since)
        except CadLoopError:
            time.sleep(0.05)
            continue
        for event in events:
            since = event.seq
            _print_event(event.kind, event.payload)
            if event.kind is EventKind.RUN_FINISHED:
                return
        time.sleep(0.05)


def _print_event(kind: EventKind, payload: dict) -> None:
    if kind is EventKind.MACRO_GENERATED:
        print(f"[attempt {payload['attempt']}] macro generated")
    elif kind is EventKind.REFINED:
        print(f"[attempt {payload['attempt']}] refined ({payload['kind']}), version {payload['version']}")
    elif kind is EventKind.EXECUTION_FINISHED:
        if payload["outcome"] == "ok":
            print(f"[attempt {payload['attempt']}] executed ok ({payload['duration']:.2f}s)")
        else:
            print(f"[attempt {payload['attempt']}] execution error: {payload.get('error_message')}")
    elif kind is EventKind.SCORED:
        print(f"[attempt {payload['attempt']}] score {payload['value']:.3f}")
    elif kind is EventKind.CAPTION_REQUESTED:
        print(f"[attempt {payload['attempt']}] machine caption: {payload['machine_caption']}")
        print("enter a caption override (or press enter to accept):", flush=True)
    elif kind is EventKind.CAPTION_DECIDED:
        caption = payload["caption"]
        print(f"[attempt {payload['attempt']}] caption ({caption['source']}): {caption['text']}")
    elif kind is EventKind.RUN_FINISHED:
        line = f"run finished: {payload['status']}"
        if payload.get("failure_kind"):
            line += f" ({payload['failure_kind']})"
        if payload.get("cause"):
            line += f" ({payload['cause']})"
        print(line)


def cmd_run(args: argparse.Namespace) -> int:
    config = _build_config(args)
    store = EventStore(Path(args.store))
    provider = _build_provider(args)
    prompt_set = args.prompt_set or ("mock" if config.executor_kind is ExecutorKind.MOCK else "default")
    llm = LlmClient(provider, load_prompt_set(prompt_set))
    executor = _build_executor(config.executor_kind.value, args.freecad_binary)
    scorer = _build_scorer(args)

    mailbox = None
    if config.feedback_mode is FeedbackMode.INTERACTIVE:
        mailbox = Mailbox()

        def read_stdin() -> None:
            for line in sys.stdin:
                mailbox.put(line.rstrip("\n"))

        threading.Thread(target=read_stdin, daemon=True).start()

    pipeline = Pipeline(llm, executor, scorer, store, mailbox=mailbox)
    run_id = pipeline.begin(args.query, config)
    print(f"run {run_id} started")
    stop = threading.Event()
    follower = threading.Thread(target=_follow_events, args=(store, run_id, stop), daemon=True)
    follower.start()
    try:
        record = pipeline.drive()
    finally:
        follower.join(timeout=2.0)
        stop.set()
        if mailbox is not None:
            mailbox.close()
    if record.status is RunStatus.SUCCESS:
        return EXIT_SUCCESS
    if record.status is RunStatus.ABORTED:
        return EXIT_ABORTED
    return EXIT_FAILURE


def cmd_bench(args: argparse.Namespace) -> int:
    if bool(args.results) == bool(args.execute):
        raise SystemExit("provide exactly one of --results or --execute")
    outdir = Path(args.out)
    if args.results:
        rows = load_results(args.results)
    else:
        if not args.script:
            raise SystemExit("--execute requires --script")
        items = load_dataset(args.dataset)
        script = load_replay_script(args.script)
        store = EventStore(Path(args.store))
        config = PipelineConfig(executor_kind=ExecutorKind.MOCK)
        rows = run_benchmark(items, script, store, config=config)
        write_results(rows, outdir / "results.jsonl")
    report = compute_metrics(rows)
    paths = emit_report(report, outdir)
    for k, value in enumerate(report.success_at):
        print(f"success@{k}: {value:.4f}")
    print(f"report written to {paths['md']}")
    return EXIT_SUCCESS


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .api import create_app

    store = EventStore(Path(args.store))
    base_config = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()

    def factory(mailbox: Mailbox) -> Pipeline:
        provider = _build_provider(args)
        prompt_set = args.prompt_set or (
            "mock" if base_config.executor_kind is ExecutorKind.MOCK else "default"
        )
        llm = LlmClient(provider, load_prompt_set(prompt_set))
        executor = _build_executor(base_config.executor_kind.value, args.freecad_binary)
        return Pipeline(llm, executor, _build_scorer(args), store, mailbox=mailbox)

    app = create_app(
        store,
        factory,
        base_config=base_config,
        token=args.token,
        static_dir=args.static,
        reports_dir=args.reports,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_SUCCESS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cadloop", description="iterative text-to-CAD runner")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="drive a single query")
    run.add_argument("--query", required=True)
    run.add_argument("--threshold", type=float)
    run.add_argument("--error-iter", type=int, dest="error_iter")
    run.add_argument("--model-iter", type=int, dest="model_iter")
    run.add_argument("--mode", choices=["auto", "interactive"])
    run.add_argument("--executor", choices=["freecad", "mock"])
    run.add_argument("--config", help="JSON config file")
    run.add_argument("--feedback-timeout", type=float, dest="feedback_timeout")
    run.add_argument("--store", default="runs")
    run.add_argument("--freecad-binary", default="freecadcmd")
    _add_provider_args(run)
    _add_scorer_args(run)
    run.set_defaults(func=cmd_run)

    bench = sub.add_parser("bench", help="run the benchmark or score saved results")
    bench.add_argument("--dataset", default=str(default_dataset_path()),
                       help="dataset JSONL (defaults to the packaged one)")
    bench.add_argument("--out", required=True)
    bench.add_argument("--results", help="precomputed results JSONL")
    bench.add_argument("--execute", action="store_true", help="execute the dataset now")
    bench.add_argument("--executor", choices=["mock"], default="mock")
    bench.add_argument("--llm", choices=["replay"], default="replay")
    bench.add_argument("--script", help="replay script path")
    bench.add_argument("--store", default="runs")
    bench.set_defaults(func=cmd_bench)

    serve = sub.add_parser("serve", help="serve the HTTP API and operator UI")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8780)
    serve.add_argument("--store", default="runs")
    serve.add_argument("--static", help="built UI directory")
    serve.add_argument("--reports", help="benchmark reports directory")
    serve.add_argument("--token", help="require this bearer token on mutating endpoints")
    serve.add_argument("--config", help="JSON config file")
    serve.add_argument("--freecad-binary", default="freecadcmd")
    _add_provider_args(serve)
    _add_scorer_args(serve)
    serve.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
