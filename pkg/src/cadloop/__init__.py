"""Iterative text-to-CAD generation with execution and visual feedback loops."""

from .bench import (
    DatasetItem,
    Difficulty,
    MetricsReport,
    RunRow,
    benchmark_and_report,
    compute_metrics,
    default_dataset_path,
    deltas,
    emit_report,
    failure_breakdown,
    format_percent,
    format_points,
    improvement,
    load_dataset,
    load_results,
    per_difficulty,
    row_from_record,
    run_benchmark,
    success_at_k,
    write_results,
)
from .config import ExecutorKind, FeedbackMode, PipelineConfig
from .errors import (
    BenchError,
    CadLoopError,
    CaptionError,
    ConfigError,
    ContractError,
    DatasetError,
    MacroEvalError,
    MacroParseError,
    MetricsError,
    ProviderError,
    ResponseFormatError,
    RunNotFoundError,
    ScorerError,
    SequenceError,
    StoreError,
    TemplateError,
)
from .executor import (
    Dialect,
    ErrorClass,
    ExecutionResult,
    FreeCadExecutor,
    MacroDocument,
    MockExecutor,
    Outcome,
    RenderArtifact,
    RenderKind,
)
from .feedback import CaptionDecision, DecidedBy, FeedbackBroker, Mailbox, arbitrate, record_verdict
from .llm import (
    HttpChatProvider,
    LlmClient,
    MacroGeneration,
    PromptSet,
    PromptTemplate,
    ProviderKind,
    ProviderSpec,
    ReplayProvider,
    extract_generation,
    load_prompt_set,
    load_replay_script,
    render_prompt,
    replay_provider_for,
)
from .pipeline import (
    Action,
    ErrorRefine,
    Execute,
    Finish,
    GenerateInitial,
    ModelRefine,
    Pipeline,
    RequestCaption,
    ScoreRender,
    classify_failure,
    counts_as_success,
    next_action,
    stopping_criterion,
)
from .records import (
    Attempt,
    EventKind,
    FailureKind,
    RunEvent,
    RunRecord,
    RunStatus,
    Verdict,
    apply_event,
    fold_events,
    record_to_dict,
)
from .scene import Primitive, SceneDescriptor, Shape, canonicalize, scene_from_primitives
from .scoring import (
    Caption,
    CaptionSource,
    RemoteScorer,
    Score,
    ScoreBackend,
    StubScorer,
    describe_scene,
    stub_score,
    vqa_question,
)
from .store import EventStore, new_run_id

__version__ = "0.1.0"

__all__ = [
    "Action",
    "Attempt",
    "BenchError",
    "CadLoopError",
    "Caption",
    "CaptionDecision",
    "CaptionError",
    "CaptionSource",
    "ConfigError",
    "ContractError",
    "DatasetError",
    "DatasetItem",
    "DecidedBy",
    "Dialect",
    "Difficulty",
    "ErrorClass",
    "ErrorRefine",
    "EventKind",
    "EventStore",
    "Execute",
    "ExecutionResult",
    "ExecutorKind",
    "FailureKind",
    "FeedbackBroker",
    "FeedbackMode",
    "Finish",
    "FreeCadExecutor",
    "GenerateInitial",
    "HttpChatProvider",
    "LlmClient",
    "MacroDocument",
    "MacroEvalError",
    "MacroGeneration",
    "MacroParseError",
    "Mailbox",
    "MetricsError",
    "MetricsReport",
    "MockExecutor",
    "ModelRefine",
    "Outcome",
    "Pipeline",
    "PipelineConfig",
    "Primitive",
    "PromptSet",
    "PromptTemplate",
    "ProviderError",
    "ProviderKind",
    "ProviderSpec",
    "RemoteScorer",
    "RenderArtifact",
    "RenderKind",
    "ReplayProvider",
    "RequestCaption",
    "ResponseFormatError",
    "RunEvent",
    "RunNotFoundError",
    "RunRecord",
    "RunRow",
    "RunStatus",
    "Score",
    "ScoreBackend",
    "ScoreRender",
    "ScorerError",
    "SceneDescriptor",
    "SequenceError",
    "Shape",
    "StoreError",
    "StubScorer",
    "TemplateError",
    "Verdict",
    "apply_event",
    "arbitrate",
    "benchmark_and_report",
    "canonicalize",
    "classify_failure",
    "compute_metrics",
    "counts_as_success",
    "default_dataset_path",
    "deltas",
    "describe_scene",
    "emit_report",
    "extract_generation",
    "failure_breakdown",
    "fold_events",
    "format_percent",
    "format_points",
    "improvement",
    "load_dataset",
    "load_prompt_set",
    "load_replay_script",
    "load_results",
    "new_run_id",
    "next_action",
    "per_difficulty",
    "record_to_dict",
    "record_verdict",
    "render_prompt",
    "replay_provider_for",
    "row_from_record",
    "run_benchmark",
    "scene_from_primitives",
    "stopping_criterion",
    "stub_score",
    "success_at_k",
    "vqa_question",
    "write_results",
]
