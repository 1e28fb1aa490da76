"""Per-episode metrics and their CSV encoding."""
from __future__ import annotations

import csv
from dataclasses import astuple, dataclass, fields
from typing import Sequence

CSV_COLUMNS = (
    "episode",
    "total_reward",
    "completed_tasks",
    "completion_ratio",
    "energy_total_j",
    "energy_per_task_j",
    "avg_time_cost_s",
    "steps_survived",
)


@dataclass
class RunMetrics:
    episode: int
    total_reward: float
    completed_tasks: int
    completion_ratio: float
    energy_total_j: float
    energy_per_task_j: float
    avg_time_cost_s: float
    steps_survived: int


def episode_metrics(outcomes: Sequence, episode: int = 0) -> RunMetrics:
    """Fold one episode's step outcomes into a metrics row.

    One task is dispatched per step. The time cost averages the worst sub-task
    delay over completed and expired tasks alike.
    """
    if not outcomes:
        return RunMetrics(episode, 0.0, 0, 0.0, 0.0, 0.0, 0.0, 0)
    last = outcomes[-1]
    completed, expired = last.completed_count, last.expired_count
    n_tasks = completed + expired
    energy = sum(o.energy_j for o in outcomes)
    return RunMetrics(
        episode=episode,
        total_reward=sum(o.reward for o in outcomes),
        completed_tasks=completed,
        completion_ratio=completed / n_tasks if n_tasks else 0.0,
        energy_total_j=energy,
        energy_per_task_j=energy / max(1, len(outcomes)),
        avg_time_cost_s=sum(o.max_delay_s for o in outcomes) / len(outcomes),
        steps_survived=len(outcomes),
    )


def _fmt(v) -> str:
    return str(v) if isinstance(v, int) else format(v, ".17g")


def write_csv(path, rows: Sequence[RunMetrics], comments: Sequence[str] = ()) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow([_fmt(v) for v in astuple(r)])
        for c in comments:
            fh.write(f"# {c}\n")


def read_csv(path) -> list[RunMetrics]:
    types = [f.type for f in fields(RunMetrics)]
    rows = []
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    if tuple(header) != CSV_COLUMNS:
        raise ValueError(f"{path}: unexpected header {header}")
    for rec in reader:
        rows.append(RunMetrics(*[_parse(v, t in ("int", int)) for v, t in zip(rec, types)]))
    return rows


def _parse(v: str, integral: bool):
    # counts are integers in per-run files but fractional in across-run means
    if integral:
        try:
            return int(v)
        except ValueError:
            pass
    return float(v)
