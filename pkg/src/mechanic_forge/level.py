"""Tile-map levels and their physics constants.

A level file is an ASCII grid followed by a ``key = value`` constants block,
separated by a blank line.  Grid characters: ``#`` solid, ``.`` empty,
``P`` spawn (exactly one), ``G`` goal (at least one).
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field

GRID_CHARS = {"#", ".", "P", "G"}

DEFAULT_LEVEL_RESOURCE = "mechanic_maker.txt"


class MalformedMap(ValueError):
    """Raised when a level file cannot be parsed or fails validation."""


@dataclass(frozen=True)
class LevelSpec:
    """Immutable level description: geometry plus movement constants.

    Coordinates are in tiles.  Column x spans ``[0, width)`` left to right.
    Row y spans ``[origin_y, origin_y + height)`` bottom to top; ``origin_y``
    lets a map sit higher than y=0 so that airborne play happens in the
    range rule conditions can talk about.
    """

    width: int
    height: int
    solid: frozenset[tuple[int, int]]  # (column, row) in world tile coords
    spawn: tuple[int, int]
    goals: frozenset[tuple[int, int]]
    gravity: float = 15.0
    timestep: float = 0.02
    base_speed: float = 8.0
    base_jump_force: float = 10.0
    air_control_factor: float = 0.65
    origin_y: int = 0
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if self.timestep <= 0:
            raise MalformedMap("timestep must be positive")
        if self.gravity < 0:
            raise MalformedMap("gravity must be non-negative")
        if not (0.0 <= self.air_control_factor <= 1.0):
            raise MalformedMap("air_control_factor must lie in [0, 1]")

    @property
    def bottom(self) -> float:
        return float(self.origin_y)

    @property
    def top(self) -> float:
        return float(self.origin_y + self.height)

    def is_solid(self, cx: int, cy: int) -> bool:
        return (cx, cy) in self.solid


_CONSTANT_KEYS = {
    "gravity": float,
    "timestep": float,
    "base_speed": float,
    "base_jump_force": float,
    "air_control_factor": float,
    "origin_y": int,
}


def loads_level(text: str, name: str = "") -> LevelSpec:
    """Parse level text into a LevelSpec.

    Raises MalformedMap on ragged grids, unknown characters, missing or
    duplicate spawn, missing goal, or bad constant lines.
    """
    lines = text.splitlines()
    grid_lines: list[str] = []
    i = 0
    while i < len(lines) and lines[i].strip() != "":
        grid_lines.append(lines[i])
        i += 1
    constant_lines = [ln for ln in lines[i:] if ln.strip() != ""]

    if not grid_lines:
        raise MalformedMap("level has no grid section")
    width = len(grid_lines[0])
    if width == 0:
        raise MalformedMap("level grid rows are empty")
    height = len(grid_lines)

    constants: dict[str, float | int] = {}
    for ln in constant_lines:
        if "=" not in ln:
            raise MalformedMap(f"bad constant line: {ln!r}")
        key, _, raw = ln.partition("=")
        key = key.strip()
        if key not in _CONSTANT_KEYS:
            raise MalformedMap(f"unknown constant {key!r}")
        try:
            constants[key] = _CONSTANT_KEYS[key](raw.strip())
        except ValueError as exc:
            raise MalformedMap(f"bad value for {key!r}: {raw.strip()!r}") from exc

    origin_y = int(constants.get("origin_y", 0))

    solid = set()
    spawns = []
    goals = set()
    for row_idx, ln in enumerate(grid_lines):
        if len(ln) != width:
            raise MalformedMap(f"grid row {row_idx} has length {len(ln)}, expected {width}")
        # File rows run top to bottom; world rows run bottom to top.
        wy = origin_y + (height - 1 - row_idx)
        for cx, ch in enumerate(ln):
            if ch not in GRID_CHARS:
                raise MalformedMap(f"unknown map character {ch!r} at row {row_idx}")
            if ch == "#":
                solid.add((cx, wy))
            elif ch == "P":
                spawns.append((cx, wy))
            elif ch == "G":
                goals.add((cx, wy))

    if len(spawns) != 1:
        raise MalformedMap(f"level must contain exactly one spawn, found {len(spawns)}")
    if not goals:
        raise MalformedMap("level must contain at least one goal")

    kwargs = {k: v for k, v in constants.items() if k != "origin_y"}
    return LevelSpec(
        width=width,
        height=height,
        solid=frozenset(solid),
        spawn=spawns[0],
        goals=frozenset(goals),
        origin_y=origin_y,
        name=name,
        **kwargs,
    )


def load_level(path) -> LevelSpec:
    """Load a level from a file path."""
    with open(path, encoding="utf-8") as fh:
        return loads_level(fh.read(), name=str(path))


def load_default_level() -> LevelSpec:
    """Load the level bundled with the package."""
    ref = importlib.resources.files("mechanic_forge") / "levels" / DEFAULT_LEVEL_RESOURCE
    return loads_level(ref.read_text(encoding="utf-8"), name=DEFAULT_LEVEL_RESOURCE)
