"""Evaluation harness: task files, batch runs, and metric reports."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .engine import EngineConfig, Episode, PolicyBackend, run_episode
from .pool import RoutingPool
from .rewards import CostWindow, RewardConfig, cost_reward, exact_match, f1_score


class TaskFileError(ValueError):
    def __init__(self, line_no: int, detail: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {detail}")


class DuplicateTaskIdError(TaskFileError):
    pass


@dataclass
class TaskRecord:
    id: str
    question: str
    golds: list[str]


def load_tasks(path: str) -> list[TaskRecord]:
    """Load a JSONL task file of {"id", "question", "golden_answers"} rows.

    Raises:
        TaskFileError: malformed JSON or missing/invalid fields, with the
            offending line number.
        DuplicateTaskIdError: repeated task id.
    """
    tasks: list[TaskRecord] = []
    seen_ids: set[str] = set()
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise TaskFileError(line_no, f"invalid JSON: {exc}")
            if not isinstance(row, dict):
                raise TaskFileError(line_no, "row must be a JSON object")
            try:
                task_id = str(row["id"])
                question = row["question"]
                golds = row["golden_answers"]
            except KeyError as exc:
                raise TaskFileError(line_no, f"missing field {exc}")
            if not isinstance(question, str) or not question.strip():
                raise TaskFileError(line_no, "question must be a nonempty string")
            if (
                not isinstance(golds, list)
                or not golds
                or not all(isinstance(g, str) for g in golds)
            ):
                raise TaskFileError(
                    line_no, "golden_answers must be a nonempty list of strings"
                )
            if task_id in seen_ids:
                raise DuplicateTaskIdError(line_no, f"duplicate task id {task_id!r}")
            seen_ids.add(task_id)
            tasks.append(TaskRecord(id=task_id, question=question, golds=list(golds)))
    return tasks


@dataclass
class MetricsSummary:
    n: int
    em_mean: float
    f1_mean: float
    avg_api_calls: float
    avg_cost_raw: float
    per_model_calls: dict[str, int] = field(default_factory=dict)

    def to_record(self) -> dict:
        return {
            "n": self.n,
            "em_mean": self.em_mean,
            "f1_mean": self.f1_mean,
            "avg_api_calls": self.avg_api_calls,
            "avg_cost_raw": self.avg_cost_raw,
            "per_model_calls": dict(self.per_model_calls),
        }

    @classmethod
    def from_record(cls, record: dict) -> "MetricsSummary":
        return cls(
            n=int(record["n"]),
            em_mean=float(record["em_mean"]),
            f1_mean=float(record["f1_mean"]),
            avg_api_calls=float(record["avg_api_calls"]),
            avg_cost_raw=float(record["avg_cost_raw"]),
            per_model_calls={
                k: int(v) for k, v in record["per_model_calls"].items()
            },
        )


def evaluate(
    tasks: Sequence,
    policy_factory: Callable[[object], PolicyBackend],
    pool: RoutingPool,
    engine_config: EngineConfig = EngineConfig(),
    reward_config: RewardConfig = RewardConfig(),
    warmup_costs: Sequence[float] = (),
) -> tuple[MetricsSummary, list[Episode]]:
    """Run every task through a fresh policy and aggregate metrics.

    EM and F1 are computed on final answers directly (an absent answer
    scores 0), independent of the format gate.  The cost window starts
    fresh, primed only with ``warmup_costs``.

    Raises:
        ValueError: empty task list (metrics would be undefined).
    """
    if not tasks:
        raise ValueError("cannot evaluate an empty task list")
    window = CostWindow(reward_config.window_capacity)
    for cost in warmup_costs:
        cost_reward(window, cost, reward_config)

    episodes: list[Episode] = []
    em_total = 0.0
    f1_total = 0.0
    calls_total = 0
    cost_total = 0.0
    per_model: dict[str, int] = {}
    for task in tasks:
        policy = policy_factory(task)
        episode = run_episode(
            task.question,
            list(task.golds),
            policy,
            pool,
            window,
            engine_config,
            reward_config,
        )
        episodes.append(episode)
        if episode.final_answer is not None:
            em_total += exact_match(episode.final_answer, task.golds)
            f1_total += f1_score(episode.final_answer, task.golds)
        calls_total += episode.route_count
        cost_total += episode.rewards.cost_raw
        for call in episode.calls:
            per_model[call.model_id] = per_model.get(call.model_id, 0) + 1

    n = len(episodes)
    summary = MetricsSummary(
        n=n,
        em_mean=em_total / n,
        f1_mean=f1_total / n,
        avg_api_calls=calls_total / n,
        avg_cost_raw=cost_total / n,
        per_model_calls=per_model,
    )
    return summary, episodes


def report(summary: MetricsSummary, fmt: str = "table") -> str:
    """Render a summary as an aligned table or a machine-readable JSON line."""
    if fmt == "machine":
        return json.dumps(summary.to_record(), sort_keys=True)
    if fmt != "table":
        raise ValueError(f"unknown report format {fmt!r}")
    lines = [
        f"{'tasks':>16}  {summary.n}",
        f"{'exact match':>16}  {summary.em_mean:.4f}",
        f"{'f1':>16}  {summary.f1_mean:.4f}",
        f"{'avg api calls':>16}  {summary.avg_api_calls:.4f}",
        f"{'avg raw cost':>16}  {summary.avg_cost_raw:.4f}",
    ]
    for model_id in sorted(summary.per_model_calls):
        lines.append(
            f"{'calls to':>16}  {model_id}: {summary.per_model_calls[model_id]}"
        )
    return "\n".join(lines)


def parse_report(text: str) -> MetricsSummary:
    """Invert `report(..., fmt="machine")`."""
    return MetricsSummary.from_record(json.loads(text))


def write_episode_log(path: str, episodes: Sequence[Episode]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for episode in episodes:
            handle.write(json.dumps(episode.to_record(), sort_keys=True) + "\n")
