from __future__ import annotations

import random
from pathlib import Path

import pytest

from cadloop import (
    EventStore,
    LlmClient,
    MockExecutor,
    Pipeline,
    PipelineConfig,
    ReplayProvider,
    SceneDescriptor,
    StubScorer,
    load_prompt_set,
)
from cadloop.scene import format_number

CUBE_10 = {"primitives": [{"shape": "box", "params": [10, 10, 10], "position": [0, 0, 0]}]}


def scene(data: dict) -> SceneDescriptor:
    return SceneDescriptor.from_dict(data)


def macro_for_primitives(primitives: list[dict]) -> str:
    """Emit a mock-dialect macro that reconstructs the given primitives."""
    lines = []
    for i, prim in enumerate(primitives):
        name = f"s{i}"
        params = " ".join(format_number(float(p)) for p in prim["params"])
        lines.append(f"{prim['shape']} {name} {params}")
        pos = prim.get("position", [0, 0, 0])
        if any(pos):
            offsets = " ".join(format_number(float(c)) for c in pos)
            lines.append(f"move {name} {offsets}")
    return "\n".join(lines)


def response_with(macro: str, plan: str = "Here is the plan.") -> str:
    return f"{plan}\n```\n{macro}\n```\n"


def random_program(rng: random.Random) -> str:
    """A valid mock-dialect program with creates, moves, and an occasional boolean."""
    lines = []
    live = []
    for i in range(rng.randint(1, 6)):
        name = f"n{i}"
        kind = rng.choice(["box", "sphere", "cylinder"])
        dims = [rng.randint(1, 20) for _ in range(3)]
        if kind == "box":
            lines.append(f"box {name} {dims[0]} {dims[1]} {dims[2]}")
        elif kind == "sphere":
            lines.append(f"sphere {name} {dims[0]}")
        else:
            lines.append(f"cylinder {name} {dims[0]} {dims[1]}")
        if rng.random() < 0.5:
            lines.append(f"move {name} {rng.randint(-9, 9)} {rng.randint(-9, 9)} {rng.randint(-9, 9)}")
        live.append(name)
    if len(live) >= 2 and rng.random() < 0.5:
        a, b = rng.sample(live, 2)
        op = rng.choice(["union", "cut"])
        lines.append(f"{op} r0 {a} {b}")
    return "\n".join(lines)


def build_pipeline(
    tmp_path: Path,
    responses: list[str],
    expected: dict | SceneDescriptor | None = CUBE_10,
    durable: bool = False,
    mailbox=None,
    subdir: str = "runs",
) -> tuple[Pipeline, EventStore]:
    store = EventStore(tmp_path / subdir, durable=durable)
    if isinstance(expected, dict):
        expected = scene(expected)
    pipeline = Pipeline(
        llm=LlmClient(ReplayProvider(responses), load_prompt_set("mock")),
        executor=MockExecutor(),
        scorer=StubScorer(expected_scene=expected),
        store=store,
        mailbox=mailbox,
    )
    return pipeline, store


@pytest.fixture
def cube_scene() -> SceneDescriptor:
    return scene(CUBE_10)


@pytest.fixture
def quick_config() -> PipelineConfig:
    return PipelineConfig(error_iter=1, model_iter=1)
