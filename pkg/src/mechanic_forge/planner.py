"""A* rule evaluator: plans through the simulation to judge a rule.

States are deduplicated on a 0.1-tile / 0.1-velocity grid so the search
space stays finite.  Every edge costs one tick, the heuristic is distance
divided by a per-rule bound on single-step displacement (admissible), and
ties break by lower heuristic first, then insertion order, which follows
the canonical action order.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from math import sqrt

from .level import LevelSpec
from .report import FitnessReport
from .rules import Effect, Rule, Variable
from .sim import _spawn_tuple, _step

DEFAULT_NODE_BUDGET = 2_000_000

QUANT = 10  # state cells per tile for closed-set hashing

ACTIONS = (0, 1, 2, 3, 4)
BASE_ACTIONS = frozenset((0, 1, 2))

ACTION_NAMES = ("MoveLeft", "MoveRight", "Jump", "NewRule", "Nothing")


@dataclass(frozen=True)
class PlanResult:
    reached: bool
    steps_to_goal: int           # path length in ticks; 0 when not reached
    path: tuple[int, ...]        # action codes along the optimal path
    nodes_expanded: int
    base_action_count: int       # movement actions tried while planning
    rule_action_count: int       # NewRule actions tried while planning
    deaths: int                  # dead successors encountered
    goal_distance: float         # 0 when reached, else closest approach
    budget_exhausted: bool


_LOOSE = 4096.0  # effectively removes an axis from the heuristic


def axis_step_bounds(level: LevelSpec, rule: Rule | None) -> tuple[float, float]:
    """Per-axis upper bounds on single-tick displacement, in tiles.

    The horizontal bound is exact (speed * dt) whenever the rule cannot
    touch speed or position.x, which is what gives the planner its
    guidance; teleporting or speed-changing rules get loose bounds on the
    affected axis.  Loose bounds only flatten the heuristic, they never
    break admissibility.
    """
    dt = level.timestep
    bounded_effect = rule is None or rule.effect in (Effect.ADD, Effect.SUBTRACT)
    if rule is None:
        var = None
    else:
        var = rule.variable

    if var is Variable.SPEED:
        bx = _LOOSE
    elif var is Variable.POSITION_X:
        bx = 10.5 if bounded_effect else _LOOSE
    else:
        bx = level.base_speed * dt

    if var is Variable.POSITION_Y:
        by = 10.5 if bounded_effect else _LOOSE
    elif var is Variable.JUMP_FORCE:
        by = 0.6 if bounded_effect else _LOOSE
    else:
        by = 0.3
    return bx, by


def _goal_centers(level: LevelSpec):
    return tuple((gx + 0.5, gy + 0.5) for gx, gy in level.goals)


def _distance(goals, x, y) -> float:
    best = None
    for gx, gy in goals:
        d = sqrt((x - gx) ** 2 + (y - gy) ** 2)
        if best is None or d < best:
            best = d
    return best


# The player's box overlaps a goal tile when the center is within 0.9 of
# the tile center horizontally and within 0.9 of center+0.1 vertically, so
# the heuristic measures distance to that region, not to the center: it
# must be zero at every state that already overlaps.
_SLACK = 0.9


def _heuristic(goals, x, y, bx, by) -> float:
    best = None
    for gx, gy in goals:
        hx = (abs(x - gx) - _SLACK) / bx
        hy = (abs(y - gy + 0.4) - _SLACK) / by
        h = max(hx, hy, 0.0)
        if best is None or h < best:
            best = h
    return best


def _key(s):
    return (int(round(s[0] * QUANT)), int(round(s[1] * QUANT)),
            int(round(s[2] * QUANT)), int(round(s[3] * QUANT)),
            int(round(s[4] * QUANT)), int(round(s[5] * QUANT)), s[6])


def plan(level: LevelSpec, rule: Rule | None,
         budget: int = DEFAULT_NODE_BUDGET,
         check_consistency: bool = False) -> PlanResult:
    """Search for a shortest goal-reaching action sequence.

    Exhausting the reachable space or the node budget yields a result with
    ``reached=False`` (and ``budget_exhausted`` set in the latter case).
    """
    goals = _goal_centers(level)
    bx, by = axis_step_bounds(level, rule)

    start = _spawn_tuple(level)
    start_key = _key(start)
    h0 = _heuristic(goals, start[0], start[1], bx, by)

    # key -> (state tuple, arrived-at-goal flag)
    records = {start_key: (start, False)}
    best_g = {start_key: 0}
    parent: dict = {start_key: None}
    open_heap = [(h0, h0, 0, start_key)]
    closed = set()
    seq = 1

    expanded = 0
    base_actions = 0
    rule_actions = 0
    deaths = 0
    closest = _distance(goals, start[0], start[1])
    exhausted = False
    goal_key = None

    while open_heap:
        f, h, _, key = heapq.heappop(open_heap)
        if key in closed:
            continue
        s, reached = records[key]
        if reached:
            goal_key = key
            break
        if expanded >= budget:
            exhausted = True
            break
        closed.add(key)
        expanded += 1
        g = best_g[key]

        d_here = _distance(goals, s[0], s[1])
        if d_here < closest:
            closest = d_here

        for action in ACTIONS:
            if action == 3:
                rule_actions += 1
            elif action != 4:
                base_actions += 1
            s2, event = _step(level, s, action, rule)
            if event == 2:
                deaths += 1
                continue
            k2 = _key(s2)
            if k2 in closed:
                continue
            g2 = g + 1
            if g2 >= best_g.get(k2, 1 << 60):
                continue
            best_g[k2] = g2
            records[k2] = (s2, event == 1)
            parent[k2] = (key, action)
            h2 = _heuristic(goals, s2[0], s2[1], bx, by)
            if check_consistency:
                assert h <= 1 + h2 + 1e-9, (
                    f"inconsistent heuristic: h={h} h'={h2}")
            heapq.heappush(open_heap, (g2 + h2, h2, seq, k2))
            seq += 1

    if goal_key is not None:
        path = []
        k = goal_key
        while parent[k] is not None:
            k, action = parent[k]
            path.append(action)
        path.reverse()
        return PlanResult(
            reached=True, steps_to_goal=len(path), path=tuple(path),
            nodes_expanded=expanded, base_action_count=base_actions,
            rule_action_count=rule_actions, deaths=deaths,
            goal_distance=0.0, budget_exhausted=False)

    return PlanResult(
        reached=False, steps_to_goal=0, path=(),
        nodes_expanded=expanded, base_action_count=base_actions,
        rule_action_count=rule_actions, deaths=deaths,
        goal_distance=closest, budget_exhausted=exhausted)


def fitness_astar(result: PlanResult, balance_weight: float) -> float:
    """Planner fitness: time to goal, action balance, distance penalty.

    Lower is better under the default orientation.  Infeasible results
    contribute steps_to_goal = 0 and keep their distance penalty.
    """
    t_m = result.base_action_count
    n_r = result.rule_action_count
    top = max(t_m, n_r)
    balance = 0.0 if top == 0 else 1.0 - abs(t_m - n_r) / top
    t_g = result.steps_to_goal if result.reached else 0
    return t_g + balance * balance_weight - result.goal_distance


def path_usage(path) -> dict[str, float]:
    """Action share percentages along a plan path."""
    total = len(path)
    counts = [0] * 5
    for a in path:
        counts[a] += 1
    return {name: 100.0 * counts[i] / total
            for i, name in enumerate(ACTION_NAMES)}


def evaluate_rule_astar(level: LevelSpec, rule: Rule | None,
                        balance_weight: float = 10.0,
                        budget: int = DEFAULT_NODE_BUDGET) -> FitnessReport:
    """Run the planner on a rule and wrap the verdict in a FitnessReport."""
    result = plan(level, rule, budget=budget)
    return FitnessReport(
        rule=rule,
        evaluator="astar",
        feasible=result.reached,
        fitness=fitness_astar(result, balance_weight),
        stats=result,
        usage=path_usage(result.path) if result.reached else None,
    )
