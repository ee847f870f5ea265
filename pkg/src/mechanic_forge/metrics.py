"""Rule-pool analysis: similarity, usage shares, variable spread.

Two rules score one point per matching symbolic field (variable,
comparator, effect) plus a normalized closeness term for each numeric
field, for a total in [0, 5].  Pool comparisons sum the score over pairs:
cross-pool pairs when the pools differ, unordered distinct pairs when a
pool is compared against itself.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .learner import ACTION_NAMES, TrainingRecord
from .planner import PlanResult
from .rules import COMPARISON_MAX, COMPARISON_MIN, EFFECT_MAX, EFFECT_MIN, Rule, Variable

_CV_SPAN = COMPARISON_MAX - COMPARISON_MIN
_EV_SPAN = EFFECT_MAX - EFFECT_MIN


class EmptyPool(ValueError):
    pass


class NoActions(ValueError):
    pass


def rule_similarity(a: Rule, b: Rule) -> float:
    score = 0.0
    if a.variable is b.variable:
        score += 1.0
    if a.comparator is b.comparator:
        score += 1.0
    if a.effect is b.effect:
        score += 1.0
    score += 1.0 - abs(a.comparison_value - b.comparison_value) / _CV_SPAN
    score += 1.0 - abs(a.effect_value - b.effect_value) / _EV_SPAN
    return score


def pool_similarity(pool_a: list[Rule], pool_b: list[Rule]) -> tuple[float, float]:
    """(aggregate, mean) similarity over pair scores.

    Comparing a pool against itself scores each unordered pair once and
    never pairs a rule with itself; comparing two distinct pools scores
    every cross pairing.
    """
    if not pool_a or not pool_b:
        raise EmptyPool("pool_similarity needs non-empty pools")
    if pool_a == pool_b:
        pairs = [(pool_a[i], pool_a[j])
                 for i in range(len(pool_a)) for j in range(i + 1, len(pool_a))]
    else:
        pairs = [(ra, rb) for ra in pool_a for rb in pool_b]
    if not pairs:
        raise EmptyPool("a pool of one rule has no within-pool pairs")
    aggregate = sum(rule_similarity(ra, rb) for ra, rb in pairs)
    return aggregate, aggregate / len(pairs)


def usage_percentages(record: TrainingRecord | PlanResult) -> dict[str, float]:
    """Per-action share of all recorded actions, in percent.

    A training record counts every action taken during training; a plan
    counts the actions on the returned path.
    """
    if isinstance(record, TrainingRecord):
        counts = record.usage_counts
        total = sum(counts)
    elif isinstance(record, PlanResult):
        counter = Counter(record.path)
        counts = [counter.get(i, 0) for i in range(len(ACTION_NAMES))]
        total = len(record.path)
    else:
        raise TypeError(f"cannot compute usage for {type(record).__name__}")
    if total == 0:
        raise NoActions("no actions recorded")
    return {name: 100.0 * counts[i] / total for i, name in enumerate(ACTION_NAMES)}


def variable_breakdown(pool: list[Rule]) -> dict[str, float]:
    """Percentage of rules targeting each variable.  Sums to 100."""
    if not pool:
        raise EmptyPool("variable_breakdown needs a non-empty pool")
    counts = Counter(rule.variable for rule in pool)
    return {var.value: 100.0 * counts.get(var, 0) / len(pool) for var in Variable}


@dataclass(frozen=True)
class PoolReport:
    aggregate_similarity: float
    mean_pairwise: float
    usage_table: dict[str, float]       # rule label -> new-rule usage %
    variable_breakdown: dict[str, float]


def make_pool_report(pool: list[Rule],
                     usage_table: dict[str, float] | None = None) -> PoolReport:
    aggregate, mean = pool_similarity(pool, pool)
    return PoolReport(
        aggregate_similarity=aggregate,
        mean_pairwise=mean,
        usage_table=dict(usage_table or {}),
        variable_breakdown=variable_breakdown(pool),
    )


def format_pool_table(report: PoolReport) -> str:
    """Aligned text table mirroring the usage/breakdown report layout."""
    lines = [
        f"aggregate similarity: {report.aggregate_similarity:.2f}",
        f"mean pairwise:        {report.mean_pairwise:.4f}",
        "",
    ]
    if report.usage_table:
        width = max(len(k) for k in report.usage_table)
        lines.append("rule".ljust(width) + "  new-rule use")
        for label, pct in report.usage_table.items():
            lines.append(f"{label.ljust(width)}  {pct:10.1f}%")
        lines.append("")
    lines.append("variable      share")
    for var, pct in report.variable_breakdown.items():
        lines.append(f"{var:12s}  {pct:5.1f}%")
    return "\n".join(lines)
