"""Macro execution backends: a hermetic mock interpreter and a headless CAD subprocess.

Both produce a render artifact on success: a canonical scene descriptor for
the mock backend, an isometric PNG for the CAD backend.
"""

from __future__ import annotations

import json
import subprocess
import time
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Protocol

from .errors import ContractError, MacroEvalError, MacroParseError
from .mock_dialect import mock_eval, mock_parse

DEFAULT_EXECUTION_TIMEOUT = 120.0
ISOMETRIC = "isometric"


class Dialect(str, Enum):
    FREECAD_PYTHON = "freecad_python"
    MOCK = "mock"


class Outcome(str, Enum):
    OK = "ok"
    ERROR = "error"


class ErrorClass(str, Enum):
    PARSE = "parse"
    RUNTIME = "runtime"
    LAUNCH = "launch"
    TIMEOUT = "timeout"


class RenderKind(str, Enum):
    PNG = "png"
    DESCRIPTOR = "descriptor"


@dataclass(frozen=True)
class MacroDocument:
    text: str
    dialect: Dialect
    version_index: int = 0


@dataclass(frozen=True)
class ExecutionResult:
    outcome: Outcome
    error_message: str | None = None
    error_class: ErrorClass | None = None
    duration: float = 0.0

    def __post_init__(self) -> None:
        if self.outcome is Outcome.ERROR and not self.error_message:
            raise ContractError("error outcome requires a non-empty error_message")

    @property
    def ok(self) -> bool:
        return self.outcome is Outcome.OK


@dataclass(frozen=True)
class RenderArtifact:
    kind: RenderKind
    path_or_hash: str
    view: str = ISOMETRIC


class Executor(Protocol):
    dialect: Dialect

    def execute(
        self, macro: MacroDocument, workdir: Path, timeout: float = DEFAULT_EXECUTION_TIMEOUT
    ) -> tuple[ExecutionResult, RenderArtifact | None]: ...


class MockExecutor:
    """Parses and evaluates the mock dialect; renders to a scene descriptor file."""

    dialect = Dialect.MOCK

    def execute(
        self, macro: MacroDocument, workdir: Path, timeout: float = DEFAULT_EXECUTION_TIMEOUT
    ) -> tuple[ExecutionResult, RenderArtifact | None]:
        if macro.dialect is not Dialect.MOCK:
            raise ContractError(f"mock executor cannot run dialect {macro.dialect.value}")
        workdir = Path(workdir)
        workdir.mkdir(parents=True, exist_ok=True)
        start = time.monotonic()
        try:
            ast = mock_parse(macro.text)
        except MacroParseError as exc:
            return (
                ExecutionResult(Outcome.ERROR, str(exc), ErrorClass.PARSE, time.monotonic() - start),
                None,
            )
        try:
            scene = mock_eval(ast)
        except MacroEvalError as exc:
            return (
                ExecutionResult(Outcome.ERROR, str(exc), ErrorClass.RUNTIME, time.monotonic() - start),
                None,
            )
        scene_path = workdir / "scene.json"
        scene_path.write_text(json.dumps(scene.to_dict(), indent=2))
        result = ExecutionResult(Outcome.OK, duration=time.monotonic() - start)
        return result, RenderArtifact(RenderKind.DESCRIPTOR, str(scene_path))


@dataclass(frozen=True)
class ProcessSpec:
    """How to invoke the headless CAD binary on an instrumented macro."""

    argv: tuple[str, ...]
    macro_path: Path
    render_path: Path
    workdir: Path


def render_epilogue(render_path: Path) -> str:
    """The injected block that captures the isometric view to a PNG."""
    template = resources.files("cadloop").joinpath("templates/render_epilogue.py").read_text()
    return template.replace("__RENDER_PATH__", str(render_path))


def build_freecad_invocation(
    macro: MacroDocument, workdir: Path, binary: str = "freecadcmd"
) -> ProcessSpec:
    """Write the macro plus render epilogue to disk and return the command to run it."""
    if macro.dialect is not Dialect.FREECAD_PYTHON:
        raise ContractError(f"freecad backend cannot run dialect {macro.dialect.value}")
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    render_path = workdir / "render.png"
    macro_path = workdir / "macro.py"
    macro_path.write_text(macro.text.rstrip("\n") + "\n\n" + render_epilogue(render_path))
    return ProcessSpec(
        argv=(binary, str(macro_path)),
        macro_path=macro_path,
        render_path=render_path,
        workdir=workdir,
    )


@dataclass
class FreeCadExecutor:
    """Runs macros through a headless CAD subprocess and collects the PNG."""

    binary: str = "freecadcmd"
    dialect: Dialect = field(default=Dialect.FREECAD_PYTHON, init=False)

    def execute(
        self, macro: MacroDocument, workdir: Path, timeout: float = DEFAULT_EXECUTION_TIMEOUT
    ) -> tuple[ExecutionResult, RenderArtifact | None]:
        spec = build_freecad_invocation(macro, Path(workdir), self.binary)
        start = time.monotonic()
        try:
            proc = subprocess.run(
                spec.argv,
                cwd=spec.workdir,
                capture_output=True,
                text=True,
                timeout=timeout,
            )
        except FileNotFoundError:
            return (
                ExecutionResult(
                    Outcome.ERROR,
                    f"backend binary not found: {self.binary}",
                    ErrorClass.LAUNCH,
                    time.monotonic() - start,
                ),
                None,
            )
        except PermissionError as exc:
            return (
                ExecutionResult(Outcome.ERROR, str(exc), ErrorClass.LAUNCH, time.monotonic() - start),
                None,
            )
        except subprocess.TimeoutExpired:
            return (
                ExecutionResult(
                    Outcome.ERROR,
                    f"execution exceeded {timeout:g}s wall clock",
                    ErrorClass.TIMEOUT,
                    time.monotonic() - start,
                ),
                None,
            )
        duration = time.monotonic() - start
        if proc.returncode != 0:
            message = (proc.stderr or proc.stdout or "").strip() or f"exit code {proc.returncode}"
            return ExecutionResult(Outcome.ERROR, message, ErrorClass.RUNTIME, duration), None
        if not spec.render_path.exists():
            # No score is computable without a render; counts as an execution
            # error so the error-refinement loop can react.
            message = "macro ran but produced no render at " + str(spec.render_path)
            if proc.stderr.strip():
                message += "; stderr: " + proc.stderr.strip()
            return ExecutionResult(Outcome.ERROR, message, ErrorClass.RUNTIME, duration), None
        return (
            ExecutionResult(Outcome.OK, duration=duration),
            RenderArtifact(RenderKind.PNG, str(spec.render_path)),
        )
