"""Reinforcement-learning rule evaluator.

Trains a tabular agent from scratch on (level, rule), then scores the rule
from the training record.  The default learner is one-step Q-learning over
a binned raycast observation; several episode streams run round-robin in
one process and share a single value table, with updates serialized by
construction.  An actor-critic learner with an n-step horizon and an
entropy bonus is available behind the same interface.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from math import exp, floor, log

import numpy as np

from .level import LevelSpec
from .report import FitnessReport
from .rules import Rule
from .sim import PLAYER_HEIGHT, _spawn_tuple, _step

ACTION_NAMES = ("MoveLeft", "MoveRight", "Jump", "NewRule", "Nothing")
N_ACTIONS = 5

# distance bins shared by the downward ray and the eight surround rays
_BIN_EDGES = (0.5, 1.0, 2.0, 4.0)

RAY_REACH = 6.0
_RAY_STEP = 0.25
_RAY_DIRS = ((0, 1), (1, 1), (1, 0), (1, -1),
             (0, -1), (-1, -1), (-1, 0), (-1, 1))  # N NE E SE S SW W NW


def _distance_bin(d: float) -> int:
    for i, edge in enumerate(_BIN_EDGES):
        if d < edge:
            return i
    return len(_BIN_EDGES)


class ObservationEncoder:
    """Total function WorldState -> hashable observation tuple.

    Rays are cast from a quarter-tile-snapped origin and cached, since the
    level never changes during an evaluation.
    """

    def __init__(self, level: LevelSpec):
        self.level = level
        self._ray_cache: dict = {}

    def _down_distance(self, x: float, y: float) -> float:
        # scan depth is capped at the ray reach: far-below floors all land
        # in the farthest bin anyway, and y can be enormous under
        # self-amplifying rules
        level = self.level
        cols = (floor(x - 0.4), floor(x + 0.4 - 1e-9))
        lowest = max(int(level.origin_y), floor(y - RAY_REACH - 1.0))
        best = None
        for c in {cols[0], cols[1]}:
            r = floor(y)
            while r >= lowest:
                if (c, r) in level.solid:
                    d = y - (r + 1)
                    if d >= 0 and (best is None or d < best):
                        best = d
                    break
                r -= 1
        return best if best is not None else RAY_REACH + 1

    def _rays(self, ox: float, oy: float):
        solid = self.level.solid
        goals = self.level.goals
        out = []
        for dx, dy in _RAY_DIRS:
            norm = (dx * dx + dy * dy) ** 0.5
            sx, sy = dx / norm * _RAY_STEP, dy / norm * _RAY_STEP
            t = _RAY_STEP
            hit = (0, 4)
            px, py = ox + sx, oy + sy
            while t <= RAY_REACH:
                cell = (floor(px), floor(py))
                if cell in solid:
                    hit = (1, _distance_bin(t))
                    break
                if cell in goals:
                    hit = (2, _distance_bin(t))
                    break
                px += sx
                py += sy
                t += _RAY_STEP
            out.append(hit)
        return tuple(out)

    def encode(self, s) -> tuple:
        """Encode an internal state tuple (see sim.py)."""
        x, y = s[0], s[1]
        cx, cy = x, y + PLAYER_HEIGHT / 2
        qx, qy = round(cx * 4), round(cy * 4)
        cached = self._ray_cache.get((qx, qy))
        if cached is None:
            down = _distance_bin(self._down_distance(x, y))
            rays = self._rays(qx / 4.0, qy / 4.0)
            cached = (down, rays)
            self._ray_cache[(qx, qy)] = cached
        return (cached[0], cached[1], s[6], floor(x), floor(y))


@dataclass(frozen=True)
class RewardConfig:
    """Per-step reward shaping.

    Every action except Nothing earns ``move_bonus``; reaching the goal
    earns ``goal_reward``; every tick costs ``1 / max_steps``.  The goal
    payout must at least match the largest possible wandering credit so a
    policy cannot prefer pacing forever over finishing.
    """
    move_bonus: float = 0.01
    goal_reward: float = 10.0
    max_steps: int = 1000

    def __post_init__(self):
        if self.max_steps <= 0:
            raise ValueError("max_steps must be positive")
        if self.goal_reward < self.move_bonus * self.max_steps:
            raise ValueError(
                "goal_reward must dominate accumulated move bonuses "
                f"({self.goal_reward} < {self.move_bonus} * {self.max_steps})")


def reward(action: int, reached_goal: bool, cfg: RewardConfig) -> float:
    """Reward for one tick."""
    r = -1.0 / cfg.max_steps
    if action != 4:
        r += cfg.move_bonus
    if reached_goal:
        r += cfg.goal_reward
    return r


@dataclass(frozen=True)
class LearnerConfig:
    algorithm: str = "q"          # "q" | "actor_critic"
    episodes_per_agent: int = 2000
    parallel_agents: int = 5
    alpha: float = 0.2
    gamma: float = 0.98
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_fraction: float = 0.6  # share of episodes over which to anneal
    time_horizon: int = 64         # actor-critic only
    entropy_beta: float = 1e-3     # actor-critic only

    def __post_init__(self):
        if self.algorithm not in ("q", "actor_critic"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.episodes_per_agent <= 0 or self.parallel_agents <= 0:
            raise ValueError("episode and agent counts must be positive")


@dataclass
class TrainingRecord:
    episodes_total: int
    total_steps: int
    goal_completions: int
    deaths: int
    shortest_success: int          # ticks; 0 when the goal was never reached
    usage_counts: list[int]        # per-action totals over all training
    episode_steps: list[int]
    episode_reached: list[bool]
    episode_rule_uses: list[int]
    success_paths: list[bytes]     # action codes of every successful episode
    time_to_train: float = 0.0     # wall clock; excluded from comparisons

    @property
    def base_action_count(self) -> int:
        return self.usage_counts[0] + self.usage_counts[1] + self.usage_counts[2]

    @property
    def rule_action_count(self) -> int:
        return self.usage_counts[3]


def epsilon_at(episode: int, total: int, cfg: LearnerConfig) -> float:
    """Linear anneal from epsilon_start to epsilon_end."""
    span = max(1, int(total * cfg.epsilon_fraction))
    if episode >= span:
        return cfg.epsilon_end
    frac = episode / span
    return cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * frac


def _greedy(row) -> int:
    best = row[0]
    idx = 0
    for i in range(1, N_ACTIONS):
        if row[i] > best:
            best = row[i]
            idx = i
    return idx


def train(level: LevelSpec, rule: Rule | None, learner: LearnerConfig,
          rew: RewardConfig, seed: int) -> TrainingRecord:
    """Train from scratch and return the full record.  Deterministic in seed."""
    t_start = time.perf_counter()
    if learner.algorithm == "actor_critic":
        record = _train_actor_critic(level, rule, learner, rew, seed)
    else:
        record = _train_q(level, rule, learner, rew, seed)
    record.time_to_train = time.perf_counter() - t_start
    return record


def _train_q(level, rule, learner, rew, seed):
    rng = np.random.default_rng(seed)
    enc = ObservationEncoder(level)
    q: dict[tuple, list[float]] = {}
    total_eps = learner.episodes_per_agent * learner.parallel_agents
    max_steps = rew.max_steps
    alpha = learner.alpha
    gamma = learner.gamma
    move_bonus = rew.move_bonus
    goal_reward = rew.goal_reward
    tick_cost = 1.0 / max_steps

    usage = [0] * N_ACTIONS
    episode_steps = []
    episode_reached = []
    episode_rule_uses = []
    success_paths = []
    goal_completions = 0
    deaths = 0
    total_steps = 0
    shortest = 0

    rand = rng.random
    randint = rng.integers

    for ep in range(total_eps):
        eps = epsilon_at(ep, total_eps, learner)
        s = _spawn_tuple(level)
        obs = enc.encode(s)
        row = q.get(obs)
        if row is None:
            row = [0.0] * N_ACTIONS
            q[obs] = row
        actions = bytearray()
        rule_uses = 0
        reached = False

        for t in range(max_steps):
            if rand() < eps:
                a = int(randint(N_ACTIONS))
            else:
                a = _greedy(row)
            s, event = _step(level, s, a, rule)
            usage[a] += 1
            actions.append(a)
            if a == 3:
                rule_uses += 1

            r = -tick_cost
            if a != 4:
                r += move_bonus
            if event == 1:
                r += goal_reward

            if event == 1 or event == 2:
                row[a] += alpha * (r - row[a])
                if event == 1:
                    reached = True
                else:
                    deaths += 1
                break
            obs2 = enc.encode(s)
            row2 = q.get(obs2)
            if row2 is None:
                row2 = [0.0] * N_ACTIONS
                q[obs2] = row2
            best2 = row2[0]
            for v in row2:
                if v > best2:
                    best2 = v
            row[a] += alpha * (r + gamma * best2 - row[a])
            obs = obs2
            row = row2

        steps = len(actions)
        total_steps += steps
        episode_steps.append(steps)
        episode_reached.append(reached)
        episode_rule_uses.append(rule_uses)
        if reached:
            goal_completions += 1
            success_paths.append(bytes(actions))
            if shortest == 0 or steps < shortest:
                shortest = steps

    return TrainingRecord(
        episodes_total=total_eps, total_steps=total_steps,
        goal_completions=goal_completions, deaths=deaths,
        shortest_success=shortest, usage_counts=usage,
        episode_steps=episode_steps, episode_reached=episode_reached,
        episode_rule_uses=episode_rule_uses, success_paths=success_paths)


def _train_actor_critic(level, rule, learner, rew, seed):
    """Tabular actor-critic: softmax policy, n-step returns, entropy bonus."""
    rng = np.random.default_rng(seed)
    enc = ObservationEncoder(level)
    policy: dict[tuple, list[float]] = {}   # preference logits
    values: dict[tuple, float] = {}
    total_eps = learner.episodes_per_agent * learner.parallel_agents
    max_steps = rew.max_steps
    alpha = learner.alpha
    gamma = learner.gamma
    horizon = learner.time_horizon
    beta = learner.entropy_beta
    tick_cost = 1.0 / max_steps

    usage = [0] * N_ACTIONS
    episode_steps = []
    episode_reached = []
    episode_rule_uses = []
    success_paths = []
    goal_completions = 0
    deaths = 0
    total_steps = 0
    shortest = 0

    def probs(logits):
        m = max(logits)
        exps = [exp(v - m) for v in logits]
        z = sum(exps)
        return [v / z for v in exps]

    for ep in range(total_eps):
        s = _spawn_tuple(level)
        actions = bytearray()
        rule_uses = 0
        reached = False
        segment: list[tuple] = []  # (obs, action, reward)

        def flush(bootstrap_obs):
            ret = 0.0 if bootstrap_obs is None else values.get(bootstrap_obs, 0.0)
            for obs_i, a_i, r_i in reversed(segment):
                ret = r_i + gamma * ret
                v = values.get(obs_i, 0.0)
                adv = ret - v
                values[obs_i] = v + alpha * adv
                logits = policy.setdefault(obs_i, [0.0] * N_ACTIONS)
                p = probs(logits)
                for j in range(N_ACTIONS):
                    grad = (1.0 if j == a_i else 0.0) - p[j]
                    ent_grad = -p[j] * (log(p[j] + 1e-12) + _entropy(p))
                    logits[j] += alpha * (adv * grad + beta * ent_grad)
            segment.clear()

        obs = enc.encode(s)
        for t in range(max_steps):
            logits = policy.setdefault(obs, [0.0] * N_ACTIONS)
            p = probs(logits)
            a = int(rng.choice(N_ACTIONS, p=p))
            s, event = _step(level, s, a, rule)
            usage[a] += 1
            actions.append(a)
            if a == 3:
                rule_uses += 1
            r = -tick_cost
            if a != 4:
                r += rew.move_bonus
            if event == 1:
                r += rew.goal_reward
            segment.append((obs, a, r))
            if event == 1 or event == 2:
                if event == 1:
                    reached = True
                else:
                    deaths += 1
                flush(None)
                break
            obs = enc.encode(s)
            if len(segment) >= horizon:
                flush(obs)

        if segment:
            flush(obs)
        steps = len(actions)
        total_steps += steps
        episode_steps.append(steps)
        episode_reached.append(reached)
        episode_rule_uses.append(rule_uses)
        if reached:
            goal_completions += 1
            success_paths.append(bytes(actions))
            if shortest == 0 or steps < shortest:
                shortest = steps

    return TrainingRecord(
        episodes_total=total_eps, total_steps=total_steps,
        goal_completions=goal_completions, deaths=deaths,
        shortest_success=shortest, usage_counts=usage,
        episode_steps=episode_steps, episode_reached=episode_reached,
        episode_rule_uses=episode_rule_uses, success_paths=success_paths)


def _entropy(p) -> float:
    return -sum(v * log(v + 1e-12) for v in p)


def fitness_rl(record: TrainingRecord, balance_weight: float) -> float:
    """Learner fitness: shortest success, action balance, death penalty.

    Lower is better under the default orientation.  A rule whose training
    never reached the goal contributes shortest_success = 0.
    """
    t_m = record.base_action_count
    n_r = record.rule_action_count
    top = max(t_m, n_r)
    balance = 0.0 if top == 0 else 1.0 - abs(t_m - n_r) / top
    return record.shortest_success + balance * balance_weight - record.deaths


def training_usage(record: TrainingRecord) -> dict[str, float]:
    """Action share percentages over all training steps."""
    total = record.total_steps
    return {name: 100.0 * record.usage_counts[i] / total
            for i, name in enumerate(ACTION_NAMES)}


def evaluate_rule_rl(level: LevelSpec, rule: Rule | None,
                     learner: LearnerConfig | None = None,
                     rew: RewardConfig | None = None,
                     balance_weight: float = 10.0,
                     seed: int = 0) -> FitnessReport:
    """Train on a rule and wrap the verdict in a FitnessReport."""
    learner = learner or LearnerConfig()
    rew = rew or RewardConfig()
    record = train(level, rule, learner, rew, seed)
    return FitnessReport(
        rule=rule,
        evaluator="rl",
        feasible=record.goal_completions > 0,
        fitness=fitness_rl(record, balance_weight),
        stats=record,
        usage=training_usage(record) if record.total_steps else None,
    )
