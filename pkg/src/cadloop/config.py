"""Run configuration: refinement budgets, threshold, and backend selection."""

from __future__ import annotations

import json
from dataclasses import dataclass, fields, replace
from enum import Enum
from pathlib import Path
from typing import Any

from .errors import ConfigError


class FeedbackMode(str, Enum):
    AUTO = "auto"
    INTERACTIVE = "interactive"


class ExecutorKind(str, Enum):
    FREECAD = "freecad"
    MOCK = "mock"


@dataclass(frozen=True)
class PipelineConfig:
    """Knobs for one run of the generate/execute/score/refine loop.

    ``threshold`` is the score a render must *exceed* (strictly) to stop;
    ``error_iter`` bounds error refinements per macro generation and
    ``model_iter`` bounds model refinements per run.
    """

    threshold: float = 0.9
    error_iter: int = 3
    model_iter: int = 3
    feedback_mode: FeedbackMode = FeedbackMode.AUTO
    feedback_timeout: float = 120.0
    executor_kind: ExecutorKind = ExecutorKind.MOCK
    llm_provider: str = "replay"
    prompt_set: str = "default"

    def __post_init__(self) -> None:
        if not 0.0 < self.threshold <= 1.0:
            raise ConfigError(f"threshold must be in (0, 1], got {self.threshold}")
        if self.error_iter < 0:
            raise ConfigError(f"error_iter must be >= 0, got {self.error_iter}")
        if self.model_iter < 0:
            raise ConfigError(f"model_iter must be >= 0, got {self.model_iter}")
        if self.feedback_timeout < 0:
            raise ConfigError(f"feedback_timeout must be >= 0, got {self.feedback_timeout}")
        if not isinstance(self.feedback_mode, FeedbackMode):
            object.__setattr__(self, "feedback_mode", FeedbackMode(self.feedback_mode))
        if not isinstance(self.executor_kind, ExecutorKind):
            object.__setattr__(self, "executor_kind", ExecutorKind(self.executor_kind))

    def to_dict(self) -> dict[str, Any]:
        return {
            "threshold": self.threshold,
            "error_iter": self.error_iter,
            "model_iter": self.model_iter,
            "feedback_mode": self.feedback_mode.value,
            "feedback_timeout": self.feedback_timeout,
            "executor_kind": self.executor_kind.value,
            "llm_provider": self.llm_provider,
            "prompt_set": self.prompt_set,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a JSON object")
        return cls.from_dict(data)

    def with_overrides(self, **overrides: Any) -> "PipelineConfig":
        """Return a copy with the given fields replaced, revalidating."""
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return replace(self, **overrides)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
