"""Prompt templating and LLM providers.

The chat payload follows the common OpenAI-compatible shape
(``{model, messages[{role, content}], temperature}``).  A deterministic
replay provider answers from a scripted response list for hermetic tests
and benchmark runs.
"""

from __future__ import annotations

import json
import os
import re
import time
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Protocol, Sequence

import httpx

from .errors import ContractError, ProviderError, ResponseFormatError, TemplateError

Message = dict[str, str]
AuditSink = Callable[[str, list[Message], str], None]

_PLACEHOLDER_RE = re.compile(r"\{([a-z_]+)\}")
_CODE_BLOCK_RE = re.compile(r"```[^\n]*\n(.*?)```", re.DOTALL)

REPROMPT_NOTE = (
    "Your previous reply did not contain exactly one fenced code block with the "
    "complete macro. Reply again with the numbered steps followed by one fenced "
    "code block containing the full macro."
)


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    body: str
    exemplars: tuple[tuple[str, str], ...] = ()

    def placeholders(self) -> set[str]:
        return set(_PLACEHOLDER_RE.findall(self.body))


def render_prompt(template: PromptTemplate, bindings: dict[str, str]) -> str:
    """Substitute placeholders in one pass; substituted text is never rescanned."""

    def replace(match: re.Match[str]) -> str:
        name = match.group(1)
        if name not in bindings:
            raise TemplateError(name)
        return bindings[name]

    return _PLACEHOLDER_RE.sub(replace, template.body)


@dataclass(frozen=True)
class PromptSet:
    name: str
    templates: dict[str, PromptTemplate]
    system: str | None = None

    REQUIRED = ("initial", "error_refine", "model_refine")

    def template(self, name: str) -> PromptTemplate:
        try:
            return self.templates[name]
        except KeyError:
            raise TemplateError(name) from None


def load_prompt_set(name_or_path: str = "default") -> PromptSet:
    """Load a template set from the packaged assets or from a directory path."""
    as_path = Path(name_or_path)
    if as_path.is_dir():
        root: Any = as_path
        set_name = as_path.name
    else:
        root = resources.files("cadloop").joinpath("templates", name_or_path)
        set_name = name_or_path
        if not root.is_dir():
            raise ContractError(f"unknown prompt set '{name_or_path}'")
    manifest = json.loads(root.joinpath("manifest.json").read_text())
    templates: dict[str, PromptTemplate] = {}
    for name, entry in manifest["templates"].items():
        body = root.joinpath(entry["file"]).read_text()
        template = PromptTemplate(
            name=name,
            body=body,
            exemplars=tuple((ex["input"], ex["output"]) for ex in entry.get("exemplars", ())),
        )
        declared = set(entry.get("placeholders", ()))
        undeclared = template.placeholders() - declared
        if undeclared:
            raise ContractError(
                f"template '{name}' uses undeclared placeholders: {sorted(undeclared)}"
            )
        templates[name] = template
    missing = [name for name in PromptSet.REQUIRED if name not in templates]
    if missing:
        raise ContractError(f"prompt set '{set_name}' is missing templates: {missing}")
    return PromptSet(name=set_name, templates=templates, system=manifest.get("system"))


@dataclass(frozen=True)
class MacroGeneration:
    plan_text: str
    macro_text: str
    raw_response: str


def extract_generation(raw_response: str) -> MacroGeneration:
    """Split an LLM reply into plan prose and the single fenced macro block."""
    blocks = _CODE_BLOCK_RE.findall(raw_response)
    if len(blocks) != 1:
        raise ResponseFormatError(
            f"expected exactly one fenced code block in the response, found {len(blocks)}"
        )
    macro_text = blocks[0].strip("\n")
    if not macro_text.strip():
        raise ResponseFormatError("the fenced code block is empty")
    plan_text = raw_response[: raw_response.index("```")].strip()
    return MacroGeneration(plan_text=plan_text, macro_text=macro_text, raw_response=raw_response)


class ProviderKind(str, Enum):
    HTTP_CHAT = "http_chat"
    REPLAY = "replay"


@dataclass(frozen=True)
class ProviderSpec:
    kind: ProviderKind
    endpoint: str = ""
    model_name: str = ""
    temperature: float = 0.0
    max_retries: int = 2
    credential: str = ""
    retry_backoff: float = 0.5

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ContractError(f"temperature must be >= 0, got {self.temperature}")
        if self.max_retries < 0:
            raise ContractError(f"max_retries must be >= 0, got {self.max_retries}")


class ChatProvider(Protocol):
    def complete(self, messages: list[Message]) -> str: ...


class HttpChatProvider:
    """OpenAI-compatible chat-completion client with bounded retries."""

    def __init__(self, spec: ProviderSpec, transport: httpx.BaseTransport | None = None):
        if spec.kind is not ProviderKind.HTTP_CHAT:
            raise ContractError(f"expected an http_chat spec, got {spec.kind.value}")
        self.spec = spec
        self._client = httpx.Client(transport=transport, timeout=60.0)

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.spec.credential:
            token = os.environ.get(self.spec.credential, "")
            if token:
                headers["Authorization"] = f"Bearer {token}"
        return headers

    def complete(self, messages: list[Message]) -> str:
        payload = {
            "model": self.spec.model_name,
            "messages": messages,
            "temperature": self.spec.temperature,
        }
        last_error: Exception | None = None
        for attempt in range(self.spec.max_retries + 1):
            try:
                response = self._client.post(self.spec.endpoint, json=payload, headers=self._headers())
                if response.status_code >= 500 or response.status_code == 429:
                    raise ProviderError(f"provider returned {response.status_code}")
                response.raise_for_status()
                return response.json()["choices"][0]["message"]["content"]
            except httpx.HTTPStatusError as exc:
                raise ProviderError(f"provider rejected the request: {exc}") from exc
            except (httpx.TransportError, ProviderError, KeyError, ValueError) as exc:
                last_error = exc
                if attempt < self.spec.max_retries and self.spec.retry_backoff > 0:
                    time.sleep(self.spec.retry_backoff * (attempt + 1))
        raise ProviderError(
            f"provider unreachable after {self.spec.max_retries + 1} attempts: {last_error}"
        )


class ReplayProvider:
    """Answers each call with the next response of a named script, in order."""

    def __init__(self, responses: Sequence[str], name: str = "script"):
        self.name = name
        self._responses = list(responses)
        self.calls = 0

    def complete(self, messages: list[Message]) -> str:
        if self.calls >= len(self._responses):
            raise ProviderError(
                f"replay script '{self.name}' exhausted after {self.calls} calls"
            )
        response = self._responses[self.calls]
        self.calls += 1
        return response


def load_replay_script(path: str | Path) -> dict[str, Any]:
    """Replay script file: {"v": 1, "runs": {key: [responses...]}, "default": [...]}."""
    data = json.loads(Path(path).read_text())
    if not isinstance(data, dict) or ("runs" not in data and "default" not in data):
        raise ContractError(f"{path}: replay script needs a 'runs' map or a 'default' list")
    return data


def replay_provider_for(script: dict[str, Any], key: str) -> ReplayProvider:
    runs = script.get("runs", {})
    if key in runs:
        return ReplayProvider(runs[key], name=key)
    if "default" in script:
        return ReplayProvider(script["default"], name=f"default[{key}]")
    raise ContractError(f"replay script has no responses for '{key}' and no default")


class LlmClient:
    """Builds prompts, calls the provider, and parses macro generations.

    Each provider call and its raw response go through the audit sink before
    parsing, so malformed responses are still persisted.  A response without a
    single code block triggers exactly one corrective reprompt.
    """

    def __init__(
        self,
        provider: ChatProvider,
        prompts: PromptSet,
        audit: AuditSink | None = None,
    ):
        self.provider = provider
        self.prompts = prompts
        self.audit = audit

    def _messages(self, template: PromptTemplate, bindings: dict[str, str]) -> list[Message]:
        messages: list[Message] = []
        if self.prompts.system:
            messages.append({"role": "system", "content": self.prompts.system})
        for exemplar_input, exemplar_output in template.exemplars:
            messages.append({"role": "user", "content": exemplar_input})
            messages.append({"role": "assistant", "content": exemplar_output})
        messages.append({"role": "user", "content": render_prompt(template, bindings)})
        return messages

    def _call(self, kind: str, template_name: str, bindings: dict[str, str]) -> MacroGeneration:
        messages = self._messages(self.prompts.template(template_name), bindings)
        raw = self.provider.complete(messages)
        if self.audit:
            self.audit(kind, messages, raw)
        try:
            return extract_generation(raw)
        except ResponseFormatError:
            retry_messages = messages + [
                {"role": "assistant", "content": raw},
                {"role": "user", "content": REPROMPT_NOTE},
            ]
            raw = self.provider.complete(retry_messages)
            if self.audit:
                self.audit(kind + "_reprompt", retry_messages, raw)
            return extract_generation(raw)

    def generate_initial(self, query: str) -> MacroGeneration:
        if not query:
            raise ContractError("query must be non-empty")
        return self._call("initial", "initial", {"user_query": query})

    def refine_on_error(self, query: str, macro: str, error_message: str) -> MacroGeneration:
        if not error_message:
            raise ContractError("error_message must be non-empty")
        return self._call(
            "error_refine",
            "error_refine",
            {"user_query": query, "macro": macro, "error_message": error_message},
        )

    def refine_on_caption(self, query: str, macro: str, caption: str) -> MacroGeneration:
        if not caption:
            raise ContractError("caption must be non-empty")
        return self._call(
            "model_refine",
            "model_refine",
            {"user_query": query, "macro": macro, "caption": caption},
        )
