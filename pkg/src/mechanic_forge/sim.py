"""Deterministic fixed-timestep platformer simulation.

The player is an axis-aligned box with instant horizontal control, gravity,
and grounded-only jumps.  One action is consumed per tick.  The NewRule
action hands control to the active game rule (see rules.py); rule effects on
position relocate the player without sweeping, which is what lets generated
rules cross geometry the base moveset cannot.

Coordinates: x grows right, y grows up, units are tiles.  ``position_x`` is
the horizontal center of the box and ``position_y`` its bottom edge (feet).
Leaving the level to the left, right, or bottom kills the player; the sky
above the map is open so high jumps and upward teleports stay legal.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import IntEnum
from math import ceil, floor

from .level import LevelSpec
from .rules import (Rule, RuleApplication, Variable, condition_holds,
                    effect_result, read_variable)

PLAYER_HALF_WIDTH = 0.4
PLAYER_HEIGHT = 0.8

SPAWN_DROP = 0.5  # spawn this far above the spawn tile's bottom edge

MAX_EJECT = 1.0  # embedded deeper than this is fatal

# Rules can feed a variable back into itself (e.g. repeated multiply), so
# speeds grow without bound; the cap keeps the per-tick collision scan
# bounded while sitting far above anything a sane rule produces.
VELOCITY_CAP = 1000.0  # tiles per second


class Action(IntEnum):
    """Canonical action order; ties elsewhere break by this order."""
    MOVE_LEFT = 0
    MOVE_RIGHT = 1
    JUMP = 2
    NEW_RULE = 3
    NOTHING = 4


class StepEvent(IntEnum):
    NONE = 0
    REACHED_GOAL = 1
    DIED = 2
    RULE_TRIGGERED = 3
    RULE_CONDITION_FAILED = 4


class SteppedTerminalState(RuntimeError):
    """Raised when step() is called on a dead or finished state."""


@dataclass(frozen=True)
class WorldState:
    position_x: float
    position_y: float
    velocity_x: float
    velocity_y: float
    grounded: bool
    speed: float
    jump_force: float
    tick: int
    alive: bool = True
    reached_goal: bool = False

    @property
    def terminal(self) -> bool:
        return self.reached_goal or not self.alive


@dataclass(frozen=True)
class StepOutcome:
    state: WorldState
    event: StepEvent


# Internal state tuple: (x, y, vx, vy, speed, jump_force, grounded)
# Kept as a plain tuple because the planner and the learner step it millions
# of times per run.

def _spawn_tuple(level: LevelSpec):
    sx, sy = level.spawn
    return (sx + 0.5, sy + SPAWN_DROP, 0.0, 0.0,
            level.base_speed, level.base_jump_force, False)


def reset(level: LevelSpec) -> WorldState:
    """Fresh state slightly above the spawn tile, default variables."""
    x, y, vx, vy, speed, jf, grounded = _spawn_tuple(level)
    return WorldState(x, y, vx, vy, grounded, speed, jf, tick=0)


def _rows_spanned(y: float):
    return range(floor(y), ceil(y + PLAYER_HEIGHT) - 1 + 1)


def _cols_spanned(x: float):
    return range(floor(x - PLAYER_HALF_WIDTH),
                 ceil(x + PLAYER_HALF_WIDTH) - 1 + 1)


def _embedded(solid, x, y) -> bool:
    for r in _rows_spanned(y):
        for c in _cols_spanned(x):
            if (c, r) in solid:
                return True
    return False


def _sweep_x(solid, x, y, dx):
    """Move horizontally by dx, stopping flush at the first solid tile.

    Returns (new_x, blocked).  The box occupies the half-open span
    [x-hw, x+hw), so a flush edge on a tile boundary does not collide.
    """
    hw = PLAYER_HALF_WIDTH
    rows = tuple(_rows_spanned(y))
    if dx > 0:
        edge = x + hw
        target = edge + dx
        b = ceil(edge)
        while b < target:
            for r in rows:
                if (b, r) in solid:
                    return b - hw, True
            b += 1
        return x + dx, False
    if dx < 0:
        edge = x - hw
        target = edge + dx
        b = floor(edge) - (1 if edge == floor(edge) else 0)
        while b + 1 > target:
            for r in rows:
                if (b, r) in solid:
                    return b + 1 + hw, True
            b -= 1
        return x + dx, False
    return x, False


def _sweep_y(solid, x, y, dy):
    """Move vertically by dy.  Returns (new_y, blocked)."""
    hh = PLAYER_HEIGHT
    cols = tuple(_cols_spanned(x))
    if dy < 0:
        target = y + dy
        b = floor(y)
        while b > target:
            for c in cols:
                if (c, b - 1) in solid:
                    return float(b), True
            b -= 1
        return target, False
    if dy > 0:
        top = y + hh
        target = top + dy
        b = ceil(top)
        while b < target:
            for c in cols:
                if (c, b) in solid:
                    return b - hh, True
            b += 1
        return y + dy, False
    return y, False


def _try_eject(solid, x, y):
    """Find the shortest push (up to MAX_EJECT) that frees an embedded box.

    Candidate pushes are tried smallest-magnitude first with a fixed
    direction order (up, down, left, right) on ties, so ejection is
    deterministic.  Returns (x, y, direction) or None if the player is
    stuck too deep.
    """
    hw, hh = PLAYER_HALF_WIDTH, PLAYER_HEIGHT
    over_r = [r for r in _rows_spanned(y)
              if any((c, r) in solid for c in _cols_spanned(x))]
    over_c = [c for c in _cols_spanned(x)
              if any((c, r) in solid for r in _rows_spanned(y))]
    candidates = []
    if over_r:
        up = (max(over_r) + 1) - y
        down = (y + hh) - min(over_r)
        candidates.append((up, 0, x, max(over_r) + 1.0, "up"))
        candidates.append((down, 1, x, min(over_r) - hh, "down"))
    if over_c:
        right = (max(over_c) + 1) - (x - hw)
        left = (x + hw) - min(over_c)
        candidates.append((left, 2, min(over_c) - hw, y, "left"))
        candidates.append((right, 3, max(over_c) + 1 + hw, y, "right"))
    candidates.sort(key=lambda t: (t[0], t[1]))
    for dist, _, nx, ny, direction in candidates:
        if dist <= MAX_EJECT and not _embedded(solid, nx, ny):
            return nx, ny, direction
    return None


def _goal_overlap(goals, x, y) -> bool:
    hw, hh = PLAYER_HALF_WIDTH, PLAYER_HEIGHT
    for gx, gy in goals:
        if x - hw < gx + 1 and x + hw > gx and y < gy + 1 and y + hh > gy:
            return True
    return False


def _fully_outside(level: LevelSpec, x, y) -> bool:
    hw, hh = PLAYER_HALF_WIDTH, PLAYER_HEIGHT
    return (x + hw <= 0 or x - hw >= level.width or y + hh <= level.bottom)


def _step(level: LevelSpec, s, action: int, rule: Rule | None):
    """Advance one tick.  ``s`` is the internal state tuple.

    Returns (next_tuple, event_int).  Event codes follow StepEvent.
    """
    x, y, vx, vy, speed, jf, grounded = s
    solid = level.solid
    dt = level.timestep
    event = 0
    teleported = False

    # 1. action: horizontal intent, jump impulse, or rule application
    if action == 0:
        vx = -speed * (1.0 if grounded else level.air_control_factor)
    elif action == 1:
        vx = speed * (1.0 if grounded else level.air_control_factor)
    elif action == 2:
        vx = 0.0
        if grounded:
            vy = jf
            grounded = False
    elif action == 3:
        vx = 0.0
        event = 4
        if rule is not None:
            var = rule.variable
            if var is Variable.SPEED:
                value = speed
            elif var is Variable.JUMP_FORCE:
                value = jf
            elif var is Variable.POSITION_X:
                value = x
            else:
                value = y
            if condition_holds(rule, value):
                new = effect_result(rule, value)
                if var is Variable.SPEED:
                    speed = new
                elif var is Variable.JUMP_FORCE:
                    jf = new
                elif var is Variable.POSITION_X:
                    x = new
                    teleported = True
                    grounded = False
                else:
                    y = new
                    teleported = True
                    grounded = False
                event = 3
    else:
        vx = 0.0

    # 2. gravity, then the runaway guards
    vy -= level.gravity * dt
    if vx > VELOCITY_CAP:
        vx = VELOCITY_CAP
    elif vx < -VELOCITY_CAP:
        vx = -VELOCITY_CAP
    if vy > VELOCITY_CAP:
        vy = VELOCITY_CAP
    elif vy < -VELOCITY_CAP:
        vy = -VELOCITY_CAP
    if x - x != 0.0 or y - y != 0.0:  # inf/nan position: off any map
        return (x, y, vx, vy, speed, jf, False), 2

    # 3. collision resolution
    if _embedded(solid, x, y):
        if teleported:
            # A teleport may land inside geometry; that is legal for one
            # tick and resolved (or fatal) on the next.
            vy += level.gravity * dt
            pass
        else:
            ejected = _try_eject(solid, x, y)
            if ejected is None:
                return (x, y, vx, vy, speed, jf, False), 2
            x, y, direction = ejected
            vx = 0.0
            if direction == "up":
                grounded = True
                vy = 0.0
            else:
                grounded = False
                if direction == "down":
                    vy = 0.0
    else:
        x, blocked_x = _sweep_x(solid, x, y, vx * dt)
        if blocked_x:
            vx = 0.0
        new_y, blocked_y = _sweep_y(solid, x, y, vy * dt)
        if blocked_y:
            if vy < 0:
                grounded = True
            vy = 0.0
        else:
            grounded = False
        y = new_y

    # 4. terminal checks
    if _goal_overlap(level.goals, x, y):
        event = 1
    elif _fully_outside(level, x, y):
        event = 2

    return (x, y, vx, vy, speed, jf, grounded), event


def step(level: LevelSpec, state: WorldState, action: Action,
         rule: Rule | None = None) -> StepOutcome:
    """Public single-tick transition over WorldState."""
    if state.terminal:
        raise SteppedTerminalState(
            f"cannot step a terminal state (tick {state.tick})")
    s = (state.position_x, state.position_y, state.velocity_x,
         state.velocity_y, state.speed, state.jump_force, state.grounded)
    (x, y, vx, vy, speed, jf, grounded), event = _step(level, s, int(action), rule)
    nxt = WorldState(
        position_x=x, position_y=y, velocity_x=vx, velocity_y=vy,
        grounded=grounded, speed=speed, jump_force=jf, tick=state.tick + 1,
        alive=event != 2, reached_goal=event == 1)
    return StepOutcome(state=nxt, event=StepEvent(event))


def apply_rule(level: LevelSpec, state: WorldState, rule: Rule
               ) -> tuple[WorldState, RuleApplication]:
    """Apply a rule to a state outside the step loop.  Pure.

    Position effects relocate the player directly; the surrounding tick
    machinery (sweeping, ejection) is step()'s job, not this function's.
    """
    value = read_variable(state, rule.variable)
    if not condition_holds(rule, value):
        return state, RuleApplication(False, rule.variable, value, value)
    new = effect_result(rule, value)
    field = {
        Variable.SPEED: "speed",
        Variable.JUMP_FORCE: "jump_force",
        Variable.POSITION_X: "position_x",
        Variable.POSITION_Y: "position_y",
    }[rule.variable]
    kwargs = {field: new}
    if rule.variable in (Variable.POSITION_X, Variable.POSITION_Y):
        kwargs["grounded"] = False
    return replace(state, **kwargs), RuleApplication(True, rule.variable, value, new)


def _settle_tuple(level: LevelSpec, s=None, limit: int = 200):
    if s is None:
        s = _spawn_tuple(level)
    ticks = 0
    for _ in range(limit):
        if s[6]:
            return s, ticks
        s, event = _step(level, s, 4, None)
        ticks += 1
        if event in (1, 2):
            raise RuntimeError("player never settled on ground")
    raise RuntimeError("player never settled on ground")


def settle(level: LevelSpec) -> WorldState:
    """Idle from spawn until grounded; a measurement-friendly start state."""
    (x, y, vx, vy, speed, jf, grounded), ticks = _settle_tuple(level)
    return WorldState(x, y, vx, vy, grounded, speed, jf, tick=ticks)


def jump_apex(level: LevelSpec, jump_force: float | None = None) -> float:
    """Height gained by a grounded jump with no rule, in tiles."""
    s, _ = _settle_tuple(level)
    if jump_force is not None:
        s = s[:5] + (jump_force,) + s[6:]
    start = s[1]
    apex = start
    s, event = _step(level, s, 2, None)
    for _ in range(100_000):
        if s[1] > apex:
            apex = s[1]
        if s[6] or event == 2:
            break
        s, event = _step(level, s, 4, None)
    return apex - start
