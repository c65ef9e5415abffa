"""Exception types shared across the engine."""

from __future__ import annotations


class CadLoopError(Exception):
    """Base class for all engine errors."""


class ContractError(CadLoopError):
    """A documented precondition was violated by the caller."""


class ConfigError(CadLoopError):
    """Invalid configuration value."""


class TemplateError(CadLoopError):
    """Prompt rendering failed; carries the offending placeholder name."""

    def __init__(self, placeholder: str):
        super().__init__(f"missing binding for placeholder '{placeholder}'")
        self.placeholder = placeholder


class ResponseFormatError(CadLoopError):
    """LLM response did not contain exactly one usable fenced code block."""


class ProviderError(CadLoopError):
    """LLM provider unreachable or out of scripted responses."""


class MacroParseError(CadLoopError):
    """Mock-dialect parse failure with a line number and reason."""

    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class MacroEvalError(CadLoopError):
    """Mock-dialect evaluation failure (runtime class)."""


class ScorerError(CadLoopError):
    """Scoring backend failed or was misconfigured; aborts the run."""


class CaptionError(CadLoopError):
    """Machine caption backend failed."""


class StoreError(CadLoopError):
    """Event store I/O or consistency failure."""


class SequenceError(StoreError):
    """Event sequence gap, or append to a sealed log."""


class RunNotFoundError(StoreError):
    """No run with the given id exists in the store."""


class DatasetError(CadLoopError):
    """Benchmark dataset file failed validation."""


class MetricsError(CadLoopError):
    """Metric undefined for the given inputs (e.g. empty row set)."""


class BenchError(CadLoopError):
    """Benchmark execution could not produce a valid result set."""
