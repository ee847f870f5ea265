"""Shared result type produced by both rule evaluators."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from .rules import Rule


@dataclass(frozen=True)
class FitnessReport:
    """What an evaluator thought of one candidate rule.

    ``stats`` is the evaluator's own record (PlanResult or TrainingRecord).
    ``usage`` maps action names to percentages; None when the evaluator
    never produced a successful action sequence.
    """
    rule: Rule
    evaluator: str  # "astar" | "rl"
    feasible: bool
    fitness: float
    stats: Any
    usage: dict[str, float] | None
