"""Run artifacts: evaluation logs, search traces, action sequences.

Logs are line-delimited JSON with sorted keys, so identical runs produce
identical bytes.  Wall-clock timings live under the single key "wall";
strip it before comparing logs across runs.
"""

from __future__ import annotations

import json
from pathlib import Path

from .learner import TrainingRecord
from .planner import PlanResult
from .report import FitnessReport
from .rules import format_rule
from .search import SearchTrace

WALL_KEY = "wall"


def entry_from_report(report: FitnessReport, seed: int,
                      actions_ref: int | None = None,
                      wall_seconds: float | None = None) -> dict:
    """One complete log record for one executed evaluation."""
    entry = {
        "role": "evaluation",
        "rule": format_rule(report.rule) if report.rule else None,
        "evaluator": report.evaluator,
        "seed": seed,
        "feasible": report.feasible,
        "fitness": report.fitness,
        "usage": report.usage,
        "actions_ref": actions_ref,
    }
    stats = report.stats
    if isinstance(stats, PlanResult):
        entry.update({
            "T_G": stats.steps_to_goal,
            "T_M": stats.base_action_count,
            "N_R": stats.rule_action_count,
            "D_G": stats.goal_distance,
            "goal_completions": 1 if stats.reached else 0,
            "deaths": stats.deaths,
            "nodes_expanded": stats.nodes_expanded,
            "budget_exhausted": stats.budget_exhausted,
            "time_to_goal": [stats.steps_to_goal] if stats.reached else [],
        })
    elif isinstance(stats, TrainingRecord):
        entry.update({
            "T_G": stats.shortest_success,
            "T_M": stats.base_action_count,
            "N_R": stats.rule_action_count,
            "O_Z": stats.deaths,
            "goal_completions": stats.goal_completions,
            "deaths": stats.deaths,
            "episodes": stats.episodes_total,
            "time_to_goal": [s for s, r in zip(stats.episode_steps,
                                               stats.episode_reached) if r],
        })
        if wall_seconds is None:
            wall_seconds = stats.time_to_train
    if wall_seconds is not None:
        entry[WALL_KEY] = {"seconds": wall_seconds}
    return entry


def final_marker(report: FitnessReport, seed: int, generation: int) -> dict:
    """Marks a generation's final rule; not an evaluation record."""
    return {
        "role": "final",
        "rule": format_rule(report.rule),
        "evaluator": report.evaluator,
        "seed": seed,
        "generation": generation,
        "feasible": report.feasible,
        "fitness": report.fitness,
        "usage": report.usage,
    }


def strip_wall(entry: dict) -> dict:
    return {k: v for k, v in entry.items() if k != WALL_KEY}


def write_jsonl(path: str | Path, entries) -> None:
    with open(path, "w") as fh:
        for entry in entries:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")


def append_jsonl(path: str | Path, entry: dict) -> None:
    with open(path, "a") as fh:
        fh.write(json.dumps(entry, sort_keys=True) + "\n")


def read_jsonl(path: str | Path) -> list[dict]:
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out


class SequenceStore:
    """Append-only store of action sequences, one id per sequence."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._next_id = 0

    def append(self, actions) -> int:
        seq_id = self._next_id
        self._next_id += 1
        append_jsonl(self.path, {"id": seq_id, "actions": list(actions)})
        return seq_id

    @staticmethod
    def load(path: str | Path) -> dict[int, list[int]]:
        return {rec["id"]: rec["actions"] for rec in read_jsonl(path)}


def success_actions(report: FitnessReport) -> list[int] | None:
    """The action sequence to log for a feasible evaluation.

    The planner's optimal path, or the learner's shortest successful
    episode.  None when the rule never reached the goal.
    """
    stats = report.stats
    if isinstance(stats, PlanResult):
        return list(stats.path) if stats.reached else None
    if isinstance(stats, TrainingRecord):
        if not stats.success_paths:
            return None
        return list(min(stats.success_paths, key=len))
    return None


def trace_to_dict(trace: SearchTrace, seed: int, generation: int,
                  evaluator_kind: str, level_name: str,
                  replay_actions: list[int] | None) -> dict:
    final = trace.final_report
    return {
        "evaluator": evaluator_kind,
        "seed": seed,
        "generation": generation,
        "level": level_name,
        "restarts": trace.restarts,
        "converged": trace.converged,
        "gate": [{"rule": format_rule(r.rule), "feasible": r.feasible,
                  "fitness": r.fitness} for r in trace.gate_reports],
        "iterations": [{
            "current": format_rule(it.current),
            "neighbors": [format_rule(r) for r in it.neighbor_rules],
            "reports": [{"rule": format_rule(r.rule), "feasible": r.feasible,
                         "fitness": r.fitness} for r in it.reports],
            "chosen": format_rule(it.chosen),
            "stale_after": it.stale_after,
        } for it in trace.iterations],
        "final_rule": format_rule(trace.final_rule),
        "final_fitness": final.fitness,
        "final_feasible": final.feasible,
        "final_usage": final.usage,
        "replay": None if replay_actions is None else {
            "actions": replay_actions,
            "steps": len(replay_actions),
            "reached": True,
        },
    }


def training_record_to_dict(record: TrainingRecord) -> dict:
    shortest = None
    if record.success_paths:
        shortest = list(min(record.success_paths, key=len))
    return {
        "episodes_total": record.episodes_total,
        "total_steps": record.total_steps,
        "goal_completions": record.goal_completions,
        "deaths": record.deaths,
        "shortest_success": record.shortest_success,
        "usage_counts": list(record.usage_counts),
        "episode_steps": list(record.episode_steps),
        "episode_reached": list(record.episode_reached),
        "episode_rule_uses": list(record.episode_rule_uses),
        "shortest_success_actions": shortest,
        WALL_KEY: {"time_to_train": record.time_to_train},
    }
