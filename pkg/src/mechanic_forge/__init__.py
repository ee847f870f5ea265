"""Rule-mechanic generation for a deterministic 2D platformer.

Candidate rules come from stochastic greedy search; each candidate is
scored either by an optimal planner or by a tabular learning agent playing
the same simulation, and the resulting rule pools can be compared for
diversity and usage patterns.
"""

from .config import ConfigError, ExperimentConfig, load_config, save_config
from .learner import (LearnerConfig, ObservationEncoder, RewardConfig,
                      TrainingRecord, evaluate_rule_rl, fitness_rl, train)
from .level import LevelSpec, MalformedMap, load_default_level, load_level, loads_level
from .metrics import (EmptyPool, NoActions, PoolReport, make_pool_report,
                      pool_similarity, rule_similarity, usage_percentages,
                      variable_breakdown)
from .planner import PlanResult, evaluate_rule_astar, fitness_astar, plan
from .replay import Frame, ReplayDivergence, render_ascii, render_svg, replay
from .report import FitnessReport
from .rules import (Comparator, Effect, Rule, RuleRangeError, RuleSyntaxError,
                    Variable, format_rule, neighbors, parse_rule, random_rule)
from .search import (NoFeasibleRuleFound, SearchConfig, SearchTrace,
                     generate_and_gate, greedy_search, make_evaluator,
                     run_generation)
from .sim import (Action, StepEvent, StepOutcome, SteppedTerminalState,
                  WorldState, apply_rule, jump_apex, reset, settle, step)

__version__ = "0.1.0"

__all__ = [
    "Action", "Comparator", "ConfigError", "Effect", "EmptyPool",
    "ExperimentConfig", "FitnessReport", "Frame", "LearnerConfig",
    "LevelSpec", "MalformedMap", "NoActions", "NoFeasibleRuleFound",
    "ObservationEncoder", "PlanResult", "PoolReport", "ReplayDivergence",
    "RewardConfig", "Rule", "RuleRangeError", "RuleSyntaxError",
    "SearchConfig", "SearchTrace", "StepEvent", "StepOutcome",
    "SteppedTerminalState", "TrainingRecord", "Variable", "WorldState",
    "apply_rule", "evaluate_rule_astar", "evaluate_rule_rl", "fitness_astar",
    "fitness_rl", "format_rule", "generate_and_gate", "greedy_search",
    "jump_apex", "load_config", "load_default_level", "load_level",
    "loads_level", "make_evaluator", "make_pool_report", "neighbors",
    "parse_rule", "plan", "pool_similarity", "random_rule", "render_ascii",
    "render_svg", "replay", "reset", "rule_similarity", "run_generation",
    "save_config", "settle", "step", "train", "usage_percentages",
    "variable_breakdown",
]
