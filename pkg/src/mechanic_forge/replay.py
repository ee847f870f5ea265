"""Re-simulation of logged action sequences, plus strip renderings.

A replay is evidence: the logged actions, pushed back through the
simulator, must reproduce the logged outcome exactly.  Any mismatch is a
ReplayDivergence, which means either the log was edited or determinism
broke.  Renderings mark the ticks where the generated rule fired and the
tick right after, so teleports show up as a visible jump between frames.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import floor

from .level import LevelSpec
from .rules import Rule
from .sim import Action, StepEvent, WorldState, reset, step

_EVENT_NAMES = {
    StepEvent.NONE: "none",
    StepEvent.REACHED_GOAL: "goal",
    StepEvent.DIED: "died",
    StepEvent.RULE_TRIGGERED: "rule",
    StepEvent.RULE_CONDITION_FAILED: "rule-miss",
}


class ReplayDivergence(RuntimeError):
    """Logged sequence does not reproduce the logged outcome."""


@dataclass(frozen=True)
class Frame:
    tick: int
    x: float
    y: float
    vx: float
    vy: float
    grounded: bool
    event: StepEvent


def replay(level: LevelSpec, rule: Rule | None, actions,
           expect_goal: bool = True) -> list[Frame]:
    """Re-simulate a sequence from spawn; frame 0 is the initial state."""
    state = reset(level)
    frames = [Frame(0, state.position_x, state.position_y, state.velocity_x,
                    state.velocity_y, state.grounded, StepEvent.NONE)]
    for i, code in enumerate(actions):
        if state.terminal:
            raise ReplayDivergence(
                f"terminal at tick {state.tick} but {len(actions) - i} "
                "actions remain")
        outcome = step(level, state, Action(code), rule)
        state = outcome.state
        frames.append(Frame(state.tick, state.position_x, state.position_y,
                            state.velocity_x, state.velocity_y,
                            state.grounded, outcome.event))
    if expect_goal and not state.reached_goal:
        raise ReplayDivergence(
            f"sequence of {len(actions)} actions ended without reaching "
            f"the goal (last event: {_EVENT_NAMES[frames[-1].event]})")
    return frames


def frames_to_records(frames: list[Frame]) -> list[dict]:
    return [{"tick": f.tick, "x": f.x, "y": f.y, "vx": f.vx, "vy": f.vy,
             "grounded": f.grounded, "event": _EVENT_NAMES[f.event]}
            for f in frames]


def _key_ticks(frames: list[Frame]) -> list[int]:
    """First frame, rule-trigger frames and their successors, last frame."""
    keys = {0, len(frames) - 1}
    for i, f in enumerate(frames):
        if f.event is StepEvent.RULE_TRIGGERED:
            keys.add(i)
            if i + 1 < len(frames):
                keys.add(i + 1)
    return sorted(keys)


def _grid_lines(level: LevelSpec, frame: Frame, marker: str) -> list[str]:
    rows = []
    px, py = floor(frame.x), floor(frame.y + 0.4)
    for wy in range(int(level.top) - 1, int(level.origin_y) - 1, -1):
        row = []
        for wx in range(level.width):
            if (wx, wy) == (px, py):
                row.append(marker)
            elif (wx, wy) in level.solid:
                row.append("#")
            elif (wx, wy) in level.goals:
                row.append("G")
            else:
                row.append(".")
        rows.append("".join(row))
    return rows


def render_ascii(level: LevelSpec, frames: list[Frame]) -> str:
    """Key-frame strip; the player is Y when the rule fires, y just after."""
    chunks = []
    prev_trigger = False
    for i in _key_ticks(frames):
        f = frames[i]
        if f.event is StepEvent.RULE_TRIGGERED:
            marker = "Y"
        elif prev_trigger:
            marker = "y"
        else:
            marker = "@"
        prev_trigger = f.event is StepEvent.RULE_TRIGGERED
        header = (f"tick {f.tick:4d}  x={f.x:6.2f} y={f.y:6.2f} "
                  f"event={_EVENT_NAMES[f.event]}")
        body = _grid_lines(level, f, marker)
        if not level.origin_y <= f.y + 0.4 < level.top:
            header += "  (player outside the drawn rows)"
        chunks.append("\n".join([header] + body))
    return "\n\n".join(chunks) + "\n"


def render_svg(level: LevelSpec, frames: list[Frame], scale: int = 16) -> str:
    """Whole-trajectory plot: gold dots where the rule fired, purple after."""
    top = max(level.top, max(f.y for f in frames) + 2.0)
    width = level.width * scale
    height = int((top - level.origin_y) * scale)

    def sx(x): return x * scale
    def sy(y): return (top - y) * scale

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="#f8f8f8"/>',
    ]
    for (cx, cy) in sorted(level.solid):
        parts.append(f'<rect x="{sx(cx)}" y="{sy(cy + 1)}" width="{scale}" '
                     f'height="{scale}" fill="#555"/>')
    for (cx, cy) in sorted(level.goals):
        parts.append(f'<rect x="{sx(cx)}" y="{sy(cy + 1)}" width="{scale}" '
                     f'height="{scale}" fill="#7c5" opacity="0.8"/>')
    pts = " ".join(f"{sx(f.x):.1f},{sy(f.y + 0.4):.1f}" for f in frames)
    parts.append(f'<polyline points="{pts}" fill="none" stroke="#36c" '
                 'stroke-width="1.5" opacity="0.7"/>')
    prev_trigger = False
    for f in frames:
        color = None
        if f.event is StepEvent.RULE_TRIGGERED:
            color = "#fc0"
        elif prev_trigger:
            color = "#93c"
        elif f.event is StepEvent.REACHED_GOAL:
            color = "#2a2"
        elif f.event is StepEvent.DIED:
            color = "#c22"
        prev_trigger = f.event is StepEvent.RULE_TRIGGERED
        if color:
            parts.append(f'<circle cx="{sx(f.x):.1f}" cy="{sy(f.y + 0.4):.1f}" '
                         f'r="{scale / 3:.1f}" fill="{color}"/>')
    start = frames[0]
    parts.append(f'<circle cx="{sx(start.x):.1f}" cy="{sy(start.y + 0.4):.1f}" '
                 f'r="{scale / 3:.1f}" fill="#36c"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
