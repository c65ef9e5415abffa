"""Render-vs-query alignment scoring and caption generation.

Two backends: a remote sidecar speaking a small JSON protocol, and a
deterministic in-process stub that scores canonical scene descriptors by
multiset Jaccard similarity of primitive signatures.
"""

from __future__ import annotations

import base64
import json
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import httpx

from .errors import CaptionError, ContractError, ScorerError
from .scene import SceneDescriptor, Shape, format_number
from .executor import RenderArtifact, RenderKind

DEFAULT_SIDECAR_TIMEOUT = 30.0


class ScoreBackend(str, Enum):
    REMOTE = "remote"
    STUB = "stub"


class CaptionSource(str, Enum):
    MACHINE = "machine"
    HUMAN = "human"


@dataclass(frozen=True)
class Score:
    value: float
    backend: ScoreBackend

    def __post_init__(self) -> None:
        if not 0.0 <= self.value <= 1.0:
            raise ContractError(f"score must be in [0, 1], got {self.value}")


@dataclass(frozen=True)
class Caption:
    text: str
    source: CaptionSource

    def __post_init__(self) -> None:
        if not self.text:
            raise ContractError("caption text must be non-empty")


def vqa_question(query: str) -> str:
    """Question posed to the VQA model; the query is embedded verbatim."""
    if not query:
        raise ContractError("query must be non-empty")
    return f"Does this figure show {query}? Please answer yes or no."


def stub_score(actual: SceneDescriptor, expected: SceneDescriptor) -> float:
    """Multiset Jaccard similarity of primitive signatures; empty vs empty is 1.0."""
    a = Counter(actual.signatures())
    b = Counter(expected.signatures())
    union = sum((a | b).values())
    if union == 0:
        return 1.0
    intersection = sum((a & b).values())
    return intersection / union


def _phrase(shape: Shape, params: tuple[float, ...]) -> str:
    if shape is Shape.BOX:
        l, w, h = params
        return f"a box of {format_number(l)}x{format_number(w)}x{format_number(h)} mm"
    if shape is Shape.SPHERE:
        (r,) = params
        return f"a sphere of radius {format_number(r)} mm"
    r, h = params
    return f"a cylinder of radius {format_number(r)} mm and height {format_number(h)} mm"


def describe_scene(scene: SceneDescriptor) -> str:
    """Deterministic machine caption for a scene.

    When every primitive sits at a distinct height the parts are listed
    top-down joined by "above"; otherwise they are listed in canonical order.
    """
    if not scene.primitives:
        return "an empty scene"
    phrases_with_z = []
    for p in scene.primitives:
        (_, _, z0), (_, _, z1) = p.bbox()
        phrases_with_z.append(((z0 + z1) / 2.0, _phrase(p.shape, p.params)))
    centers = [z for z, _ in phrases_with_z]
    if len(scene.primitives) == 1:
        return phrases_with_z[0][1]
    if len(set(centers)) == len(centers):
        ordered = [text for _, text in sorted(phrases_with_z, key=lambda t: -t[0])]
        return " above ".join(ordered)
    phrases = [text for _, text in phrases_with_z]
    if len(phrases) == 2:
        return f"{phrases[0]} and {phrases[1]}"
    return ", ".join(phrases[:-1]) + f", and {phrases[-1]}"


def load_scene_artifact(render: RenderArtifact) -> SceneDescriptor:
    if render.kind is not RenderKind.DESCRIPTOR:
        raise ScorerError(
            f"stub backend needs a descriptor render, got kind '{render.kind.value}'"
        )
    try:
        data = json.loads(Path(render.path_or_hash).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ScorerError(f"cannot read scene descriptor {render.path_or_hash}: {exc}") from exc
    return SceneDescriptor.from_dict(data)


class StubScorer:
    """Hermetic scorer: Jaccard against an expected scene, template captions."""

    backend = ScoreBackend.STUB

    def __init__(self, expected_scene: SceneDescriptor | None = None):
        self.expected_scene = expected_scene

    def vqa_score(self, render: RenderArtifact, query: str) -> Score:
        vqa_question(query)  # enforce the non-empty-query precondition
        if self.expected_scene is None:
            raise ScorerError("stub scorer configured without an expected scene")
        actual = load_scene_artifact(render)
        return Score(stub_score(actual, self.expected_scene), ScoreBackend.STUB)

    def generate_caption(self, render: RenderArtifact) -> Caption:
        scene = load_scene_artifact(render)
        return Caption(describe_scene(scene), CaptionSource.MACHINE)


class RemoteScorer:
    """Client for the sidecar protocol: POST /v1/score, /v1/caption, GET /healthz."""

    backend = ScoreBackend.REMOTE

    def __init__(
        self,
        base_url: str,
        timeout: float = DEFAULT_SIDECAR_TIMEOUT,
        transport: httpx.BaseTransport | None = None,
    ):
        self._client = httpx.Client(base_url=base_url, timeout=timeout, transport=transport)

    def _image_b64(self, render: RenderArtifact) -> str:
        if render.kind is not RenderKind.PNG:
            raise ScorerError(f"remote backend needs a png render, got kind '{render.kind.value}'")
        try:
            return base64.b64encode(Path(render.path_or_hash).read_bytes()).decode("ascii")
        except OSError as exc:
            raise ScorerError(f"cannot read render {render.path_or_hash}: {exc}") from exc

    def vqa_score(self, render: RenderArtifact, query: str) -> Score:
        payload = {"image_png_base64": self._image_b64(render), "query": query}
        try:
            response = self._client.post("/v1/score", json=payload)
            response.raise_for_status()
            value = float(response.json()["score"])
        except (httpx.HTTPError, KeyError, ValueError) as exc:
            raise ScorerError(f"sidecar score call failed: {exc}") from exc
        return Score(min(max(value, 0.0), 1.0), ScoreBackend.REMOTE)

    def generate_caption(self, render: RenderArtifact) -> Caption:
        try:
            payload = {"image_png_base64": self._image_b64(render)}
        except ScorerError as exc:
            raise CaptionError(str(exc)) from exc
        try:
            response = self._client.post("/v1/caption", json=payload)
            response.raise_for_status()
            text = response.json()["caption"]
        except (httpx.HTTPError, KeyError) as exc:
            raise CaptionError(f"sidecar caption call failed: {exc}") from exc
        if not text:
            raise CaptionError("sidecar returned an empty caption")
        return Caption(text, CaptionSource.MACHINE)

    def healthy(self) -> bool:
        try:
            return self._client.get("/healthz").status_code == 200
        except httpx.HTTPError:
            return False
