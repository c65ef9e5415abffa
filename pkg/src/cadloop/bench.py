"""Benchmark harness: dataset loading, success@k metrics, and report emission."""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Sequence

from .config import PipelineConfig
from .errors import BenchError, ContractError, DatasetError, MetricsError
from .executor import MockExecutor
from .llm import LlmClient, load_prompt_set, replay_provider_for
from .pipeline import Pipeline, classify_failure, counts_as_success, stopping_criterion
from .records import FailureKind, RunRecord, RunStatus
from .scene import SceneDescriptor
from .scoring import StubScorer
from .store import EventStore

log = logging.getLogger(__name__)


class Difficulty(str, Enum):
    EASY = "easy"
    MEDIUM = "medium"
    HARD = "hard"


@dataclass(frozen=True)
class DatasetItem:
    id: str
    query: str
    difficulty: Difficulty
    expected_scene: SceneDescriptor | None = None


def default_dataset_path() -> Path:
    """The benchmark dataset file shipped inside the package."""
    return Path(str(resources.files("cadloop").joinpath("data", "queries.jsonl")))


def load_dataset(path: str | Path) -> list[DatasetItem]:
    """Read a JSONL dataset file, validating ids, queries, and difficulties."""
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"dataset file not found: {path}")
    items: list[DatasetItem] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                data = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{lineno}: malformed JSON: {exc}") from exc
            try:
                item_id = data["id"]
                query = data["query"]
                difficulty = Difficulty(data["difficulty"])
            except KeyError as exc:
                raise DatasetError(f"{path}:{lineno}: missing field {exc}") from exc
            except ValueError:
                raise DatasetError(
                    f"{path}:{lineno}: bad difficulty {data.get('difficulty')!r}"
                ) from None
            if not query or not str(query).strip():
                raise DatasetError(f"{path}:{lineno}: empty query")
            if item_id in seen:
                raise DatasetError(f"{path}:{lineno}: duplicate id {item_id!r}")
            seen.add(item_id)
            expected = None
            if data.get("expected_scene") is not None:
                try:
                    expected = SceneDescriptor.from_dict(data["expected_scene"])
                except (KeyError, ValueError, TypeError) as exc:
                    raise DatasetError(f"{path}:{lineno}: bad expected_scene: {exc}") from exc
            items.append(DatasetItem(id=item_id, query=query, difficulty=difficulty, expected_scene=expected))
    if not items:
        log.warning("dataset %s is empty", path)
        return items
    tally = Counter(item.difficulty.value for item in items)
    log.info(
        "loaded %d items from %s (%s)",
        len(items),
        path,
        ", ".join(f"{count} {name}" for name, count in sorted(tally.items())),
    )
    return items


@dataclass(frozen=True)
class RunRow:
    """One benchmark outcome: solved at some iteration, or failed some way."""

    item_id: str
    difficulty: Difficulty
    solved_at: int | None = None
    failure_kind: FailureKind | None = None

    def __post_init__(self) -> None:
        if (self.solved_at is None) == (self.failure_kind is None):
            raise ContractError(
                f"row {self.item_id}: exactly one of solved_at / failure_kind must be set"
            )
        if self.solved_at is not None and self.solved_at < 0:
            raise ContractError(f"row {self.item_id}: solved_at must be >= 0")

    @property
    def solved(self) -> bool:
        return self.solved_at is not None

    def to_dict(self) -> dict[str, Any]:
        return {
            "item_id": self.item_id,
            "difficulty": self.difficulty.value,
            "solved_at": self.solved_at,
            "failure_kind": self.failure_kind.value if self.failure_kind else None,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunRow":
        return cls(
            item_id=data["item_id"],
            difficulty=Difficulty(data["difficulty"]),
            solved_at=data.get("solved_at"),
            failure_kind=FailureKind(data["failure_kind"]) if data.get("failure_kind") else None,
        )


def write_results(rows: Sequence[RunRow], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row.to_dict(), sort_keys=True) + "\n")


def load_results(path: str | Path) -> list[RunRow]:
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"results file not found: {path}")
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                rows.append(RunRow.from_dict(json.loads(raw)))
            except (json.JSONDecodeError, KeyError, ValueError, ContractError) as exc:
                raise DatasetError(f"{path}:{lineno}: bad result row: {exc}") from exc
    return rows


# -- metrics -----------------------------------------------------------------


def success_at_k(rows: Sequence[RunRow], k: int) -> float:
    """Fraction of rows solved within the first k model refinements."""
    if k < 0:
        raise ContractError(f"k must be >= 0, got {k}")
    if not rows:
        raise MetricsError("success@k is undefined on zero rows")
    solved = sum(1 for row in rows if row.solved_at is not None and row.solved_at <= k)
    return solved / len(rows)


def per_difficulty(rows: Sequence[RunRow]) -> dict[Difficulty, float]:
    """Solved fraction per difficulty tier, over whatever tiers appear."""
    totals: Counter[Difficulty] = Counter()
    solved: Counter[Difficulty] = Counter()
    for row in rows:
        totals[row.difficulty] += 1
        if row.solved:
            solved[row.difficulty] += 1
    return {d: solved[d] / totals[d] for d in totals}


def failure_breakdown(rows: Sequence[RunRow]) -> dict[FailureKind, float]:
    """Share of failed rows per failure kind; empty map when nothing failed."""
    kinds = [row.failure_kind for row in rows if row.failure_kind is not None]
    if not kinds:
        return {}
    counts = Counter(kinds)
    total = len(kinds)
    return {kind: counts[kind] / total for kind in counts}


def deltas(success_at: Sequence[float]) -> list[float]:
    """Consecutive differences of a success@k progression."""
    if len(success_at) < 2:
        raise MetricsError(f"deltas need at least two values, got {len(success_at)}")
    return [b - a for a, b in zip(success_at, success_at[1:])]


def improvement(success_at: Sequence[float]) -> float:
    """Overall gain from the first to the last entry."""
    if len(success_at) < 2:
        raise MetricsError(f"improvement needs at least two values, got {len(success_at)}")
    return success_at[-1] - success_at[0]


@dataclass(frozen=True)
class MetricsReport:
    success_at: tuple[float, ...]
    per_difficulty: dict[Difficulty, float]
    failure_breakdown: dict[FailureKind, float]
    deltas: tuple[float, ...]
    totals: dict[str, Any] = field(default_factory=dict)

    @property
    def k_max(self) -> int:
        return len(self.success_at) - 1


def compute_metrics(rows: Sequence[RunRow], k_max: int | None = None) -> MetricsReport:
    if not rows:
        raise MetricsError("cannot compute metrics on zero rows")
    deepest = max((row.solved_at for row in rows if row.solved_at is not None), default=0)
    if k_max is None:
        k_max = max(3, deepest)
    elif k_max < deepest:
        raise MetricsError(f"k_max {k_max} is below the deepest solved_at {deepest}")
    progression = tuple(success_at_k(rows, k) for k in range(k_max + 1))
    failures = Counter(row.failure_kind for row in rows if row.failure_kind is not None)
    tier_totals: Counter[Difficulty] = Counter(row.difficulty for row in rows)
    tier_solved: Counter[Difficulty] = Counter(
        row.difficulty for row in rows if row.solved
    )
    totals: dict[str, Any] = {
        "rows": len(rows),
        "solved": sum(1 for row in rows if row.solved),
        "failed": sum(failures.values()),
        "solved_at_k": [
            sum(1 for row in rows if row.solved_at is not None and row.solved_at <= k)
            for k in range(k_max + 1)
        ],
        "by_difficulty": {
            d.value: [tier_solved[d], tier_totals[d]]
            for d in Difficulty
            if d in tier_totals
        },
        "by_failure_kind": {kind.value: count for kind, count in sorted(failures.items())},
    }
    return MetricsReport(
        success_at=progression,
        per_difficulty=per_difficulty(rows),
        failure_breakdown=failure_breakdown(rows),
        deltas=tuple(deltas(progression)) if len(progression) >= 2 else (),
        totals=totals,
    )


# -- formatting ----------------------------------------------------------------


def format_percent(fraction: float, places: int = 2) -> str:
    """Round-half-even percentage with trailing zeros trimmed: 0.375 -> '37.5%'."""
    quantum = Decimal(1).scaleb(-places)
    value = (Decimal(str(fraction)) * 100).quantize(quantum, rounding=ROUND_HALF_EVEN)
    return format(value.normalize(), "f") + "%"


def format_points(value: float, places: int = 1) -> str:
    """Percentage-point figure (already scaled to percent), e.g. 23.1."""
    quantum = Decimal(1).scaleb(-places)
    return format(Decimal(str(value)).quantize(quantum, rounding=ROUND_HALF_EVEN).normalize(), "f")


_FAILURE_LABELS = {
    FailureKind.NON_EXECUTABLE: "non-executable macro",
    FailureKind.WRONG_STRUCTURE: "wrong structure",
}


def emit_report(report: MetricsReport, outdir: str | Path) -> dict[str, Path]:
    """Write metrics.csv, report.md, and metrics.json under outdir."""
    outdir = Path(outdir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise MetricsError(f"cannot create report directory {outdir}: {exc}") from exc

    totals = report.totals
    n_rows = totals.get("rows", 0)
    solved_counts = totals.get("solved_at_k", [])

    difficulty_order = [d for d in Difficulty if d in report.per_difficulty]

    csv_lines = ["metric,exact,percent"]
    for k, fraction in enumerate(report.success_at):
        exact = f"{solved_counts[k]}/{n_rows}" if k < len(solved_counts) else repr(fraction)
        csv_lines.append(f"success_at_{k},{exact},{format_percent(fraction)}")
    for difficulty in difficulty_order:
        solved, total = totals.get("by_difficulty", {}).get(difficulty.value, (None, None))
        exact = f"{solved}/{total}" if total else repr(report.per_difficulty[difficulty])
        csv_lines.append(
            f"accuracy_{difficulty.value},{exact},{format_percent(report.per_difficulty[difficulty])}"
        )
    failed = totals.get("failed", 0)
    for kind in sorted(report.failure_breakdown):
        count = totals.get("by_failure_kind", {}).get(kind.value)
        exact = f"{count}/{failed}" if count is not None else repr(report.failure_breakdown[kind])
        csv_lines.append(f"failures_{kind.value},{exact},{format_percent(report.failure_breakdown[kind])}")
    csv_path = outdir / "metrics.csv"
    csv_path.write_text("\n".join(csv_lines) + "\n", encoding="utf-8")

    md = ["# Benchmark report", ""]
    md.append("## Accuracy by difficulty")
    md.append("")
    md.append("| difficulty | solved | accuracy |")
    md.append("| --- | --- | --- |")
    for difficulty in difficulty_order:
        solved, total = totals.get("by_difficulty", {}).get(difficulty.value, ("?", "?"))
        md.append(
            f"| {difficulty.value} | {solved}/{total} | {format_percent(report.per_difficulty[difficulty])} |"
        )
    md.append("")
    md.append("## Success rate by refinement iteration")
    md.append("")
    md.append("| k | solved | success rate |")
    md.append("| --- | --- | --- |")
    for k, fraction in enumerate(report.success_at):
        exact = f"{solved_counts[k]}/{n_rows}" if k < len(solved_counts) else ""
        md.append(f"| {k} | {exact} | {format_percent(fraction, places=1)} |")
    md.append("")
    md.append("## Gains per iteration")
    md.append("")
    if report.deltas:
        md.append("| step | gain (points) |")
        md.append("| --- | --- |")
        for k, delta in enumerate(report.deltas):
            md.append(f"| {k} to {k + 1} | {format_points(delta * 100)} |")
    md.append("")
    md.append("## Failure breakdown")
    md.append("")
    if not report.failure_breakdown:
        md.append("no failures")
    else:
        md.append("| kind | count | share |")
        md.append("| --- | --- | --- |")
        for kind in sorted(report.failure_breakdown):
            count = totals.get("by_failure_kind", {}).get(kind.value, "?")
            md.append(
                f"| {_FAILURE_LABELS[kind]} | {count}/{failed} "
                f"| {format_percent(report.failure_breakdown[kind], places=1)} |"
            )
    md.append("")
    overall = improvement(report.success_at) if len(report.success_at) >= 2 else 0.0
    md.append(
        f"Totals: {totals.get('solved', 0)}/{n_rows} solved; "
        f"overall improvement {format_points(overall * 100)} points "
        f"(from {format_percent(report.success_at[0], places=1)} "
        f"to {format_percent(report.success_at[-1], places=1)})."
    )
    summary_line = md[-1]
    md_path = outdir / "report.md"
    md_path.write_text("\n".join(md) + "\n", encoding="utf-8")

    # Pre-formatted strings for renderers that must not redo the rounding
    # (the operator UI displays these verbatim).
    display = {
        "success_at": [
            {
                "k": k,
                "exact": f"{solved_counts[k]}/{n_rows}" if k < len(solved_counts) else "",
                "percent": format_percent(fraction, places=1),
            }
            for k, fraction in enumerate(report.success_at)
        ],
        "per_difficulty": [
            {
                "difficulty": d.value,
                "exact": "{}/{}".format(*totals.get("by_difficulty", {}).get(d.value, ("?", "?"))),
                "percent": format_percent(report.per_difficulty[d]),
            }
            for d in difficulty_order
        ],
        "failures": [
            {
                "kind": kind.value,
                "label": _FAILURE_LABELS[kind],
                "exact": f"{totals.get('by_failure_kind', {}).get(kind.value, '?')}/{failed}",
                "percent": format_percent(report.failure_breakdown[kind], places=1),
            }
            for kind in sorted(report.failure_breakdown)
        ],
        "deltas": [
            {"step": f"{k} to {k + 1}", "points": format_points(delta * 100)}
            for k, delta in enumerate(report.deltas)
        ],
        "summary": summary_line,
    }

    json_path = outdir / "metrics.json"
    json_path.write_text(
        json.dumps(
            {
                "success_at": list(report.success_at),
                "per_difficulty": {d.value: v for d, v in report.per_difficulty.items()},
                "failure_breakdown": {k.value: v for k, v in report.failure_breakdown.items()},
                "deltas": list(report.deltas),
                "totals": totals,
                "display": display,
            },
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    return {"csv": csv_path, "md": md_path, "json": json_path}


# -- turning runs into rows ------------------------------------------------------


def row_from_record(record: RunRecord, item: DatasetItem) -> RunRow:
    """Collapse a finished run into a benchmark row, honoring human verdicts."""
    if record.status is RunStatus.ABORTED:
        raise BenchError(f"run {record.run_id} aborted: {record.abort_cause}")
    if not record.terminal:
        raise BenchError(f"run {record.run_id} has not finished")
    if counts_as_success(record):
        solved_at = None
        for attempt in record.attempts:
            if attempt.score is not None and stopping_criterion(
                attempt.score.value, record.config.threshold
            ):
                solved_at = attempt.index
                break
        if solved_at is None:
            # Human accepted a run the loop never passed.
            solved_at = record.attempts[-1].index if record.attempts else 0
        return RunRow(item_id=item.id, difficulty=item.difficulty, solved_at=solved_at)
    return RunRow(
        item_id=item.id,
        difficulty=item.difficulty,
        failure_kind=classify_failure(record),
    )


def run_benchmark(
    items: Sequence[DatasetItem],
    script: dict[str, Any],
    store: EventStore,
    config: PipelineConfig | None = None,
    prompt_set: str = "mock",
) -> list[RunRow]:
    """Execute every dataset item with a replayed LLM and the mock executor."""
    if not items:
        raise BenchError("benchmark needs at least one dataset item")
    config = config or PipelineConfig()
    prompts = load_prompt_set(prompt_set)
    rows = []
    for item in items:
        provider = replay_provider_for(script, item.id)
        pipeline = Pipeline(
            llm=LlmClient(provider, prompts),
            executor=MockExecutor(),
            scorer=StubScorer(expected_scene=item.expected_scene),
            store=store,
        )
        record = pipeline.run_query(item.query, config)
        rows.append(row_from_record(record, item))
        log.info(
            "bench %s: %s",
            item.id,
            f"solved at {rows[-1].solved_at}" if rows[-1].solved else rows[-1].failure_kind.value,
        )
    return rows


def benchmark_and_report(
    items: Sequence[DatasetItem],
    script: dict[str, Any],
    store: EventStore,
    outdir: str | Path,
    config: PipelineConfig | None = None,
) -> MetricsReport:
    rows = run_benchmark(items, script, store, config=config)
    write_results(rows, Path(outdir) / "results.jsonl")
    report = compute_metrics(rows, k_max=(config or PipelineConfig()).model_iter)
    emit_report(report, outdir)
    return report
