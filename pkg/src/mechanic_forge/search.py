"""Outer search loop: random population, feasibility gate, greedy climb.

A generation starts from batches of random rules until one proves feasible,
then hill-climbs over single-field neighbors until the incumbent survives
`convergence_patience` straight iterations.  Neighbors that never reach the
goal rank below every feasible rule no matter their raw score, and an
equal-scoring neighbor never displaces the incumbent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .level import LevelSpec
from .learner import LearnerConfig, RewardConfig, evaluate_rule_rl
from .planner import DEFAULT_NODE_BUDGET, evaluate_rule_astar
from .report import FitnessReport
from .rules import Rule, neighbors, random_rule


class NoFeasibleRuleFound(RuntimeError):
    """Every generated batch failed the feasibility gate."""


@dataclass(frozen=True)
class SearchConfig:
    population_size: int = 4
    neighbors_per_iteration: int = 4
    convergence_patience: int = 3
    balance_weight: float = 10.0
    max_restarts: int = 50
    seed: int = 0

    def __post_init__(self):
        for name in ("population_size", "neighbors_per_iteration",
                     "convergence_patience", "max_restarts"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class IterationRecord:
    current: Rule
    neighbor_rules: tuple[Rule, ...]
    reports: tuple[FitnessReport, ...]
    chosen: Rule
    stale_after: int


@dataclass
class SearchTrace:
    restarts: int
    gate_reports: list[FitnessReport]
    iterations: list[IterationRecord] = field(default_factory=list)
    final_rule: Rule | None = None
    final_report: FitnessReport | None = None
    converged: bool = False


def better(a: FitnessReport, b: FitnessReport, lower_is_better: bool = True) -> bool:
    """True when a strictly outranks b.  Feasibility trumps the raw score."""
    if a.feasible != b.feasible:
        return a.feasible
    if not a.feasible:
        return False
    if lower_is_better:
        return a.fitness < b.fitness
    return a.fitness > b.fitness


def generate_and_gate(evaluator, cfg: SearchConfig, rng,
                      lower_is_better: bool = True):
    """Draw random batches until one contains a feasible rule.

    Returns (rule, report, restarts, all_reports).  A batch with no
    feasible member counts as a restart; after max_restarts such batches
    the search aborts.
    """
    all_reports: list[FitnessReport] = []
    restarts = 0
    while True:
        batch = [random_rule(rng) for _ in range(cfg.population_size)]
        reports = [evaluator(r) for r in batch]
        all_reports.extend(reports)
        best = None
        for rep in reports:
            if rep.feasible and (best is None or better(rep, best, lower_is_better)):
                best = rep
        if best is not None:
            return best.rule, best, restarts, all_reports
        restarts += 1
        if restarts >= cfg.max_restarts:
            raise NoFeasibleRuleFound(
                f"no feasible rule in {restarts} batches of {cfg.population_size}")


def greedy_search(start: Rule, start_report: FitnessReport, evaluator,
                  cfg: SearchConfig, rng,
                  lower_is_better: bool = True) -> SearchTrace:
    """Climb from a feasible start until patience runs out."""
    trace = SearchTrace(restarts=0, gate_reports=[])
    incumbent = start
    incumbent_report = start_report
    stale = 0
    while stale < cfg.convergence_patience:
        hood = neighbors(incumbent, rng, cfg.neighbors_per_iteration)
        reports = tuple(evaluator(r) for r in hood)
        best = None
        for rep in reports:
            if best is None or better(rep, best, lower_is_better):
                best = rep
        if best is not None and better(best, incumbent_report, lower_is_better):
            incumbent = best.rule
            incumbent_report = best
            stale = 0
        else:
            stale += 1
        trace.iterations.append(IterationRecord(
            current=incumbent, neighbor_rules=tuple(hood),
            reports=reports, chosen=incumbent, stale_after=stale))
    trace.final_rule = incumbent
    trace.final_report = incumbent_report
    trace.converged = True
    return trace


def make_evaluator(evaluator_kind: str, level: LevelSpec,
                   balance_weight: float = 10.0,
                   astar_budget: int = DEFAULT_NODE_BUDGET,
                   learner: LearnerConfig | None = None,
                   rew: RewardConfig | None = None,
                   seed: int = 0, cache: bool = True, sink=None):
    """Bind an evaluate_rule_* to its configuration.

    The learner evaluator derives a fresh seed per distinct rule from the
    root seed, so every training starts from scratch yet the whole search
    replays identically.  Evaluations are memoized per rule by default;
    `sink(report)` fires once per executed (non-memoized) evaluation.
    """
    if evaluator_kind not in ("astar", "rl"):
        raise ValueError(f"unknown evaluator kind {evaluator_kind!r}")
    memo: dict[Rule, FitnessReport] = {}
    counter = [0]

    def evaluate(rule: Rule) -> FitnessReport:
        if cache and rule in memo:
            return memo[rule]
        if evaluator_kind == "astar":
            rep = evaluate_rule_astar(level, rule, balance_weight=balance_weight,
                                      budget=astar_budget)
        else:
            child = np.random.SeedSequence(entropy=seed, spawn_key=(1, counter[0]))
            counter[0] += 1
            rep = evaluate_rule_rl(level, rule, learner=learner, rew=rew,
                                   balance_weight=balance_weight,
                                   seed=int(child.generate_state(1)[0]))
        if cache:
            memo[rule] = rep
        if sink is not None:
            sink(rep)
        return rep

    return evaluate


def run_generation(evaluator_kind: str, level: LevelSpec, cfg: SearchConfig,
                   astar_budget: int = DEFAULT_NODE_BUDGET,
                   learner: LearnerConfig | None = None,
                   rew: RewardConfig | None = None,
                   lower_is_better: bool = True, sink=None) -> SearchTrace:
    """One full generation: gate, then climb.  Deterministic in cfg.seed."""
    ss = np.random.SeedSequence(cfg.seed)
    rng = np.random.default_rng(ss.spawn(1)[0])
    evaluator = make_evaluator(
        evaluator_kind, level, balance_weight=cfg.balance_weight,
        astar_budget=astar_budget, learner=learner, rew=rew, seed=cfg.seed,
        sink=sink)
    rule, report, restarts, gate_reports = generate_and_gate(
        evaluator, cfg, rng, lower_is_better)
    trace = greedy_search(rule, report, evaluator, cfg, rng, lower_is_better)
    trace.restarts = restarts
    trace.gate_reports = gate_reports
    return trace


