"""Game-rule DSL: a rule is a condition and an effect on one state variable.

A rule reads ``<variable> <comparator> <int> <effect> <int>``, for example
``position.y > 12 add 7``.  When the condition holds at the moment the
player uses the rule action, the effect is applied to that same variable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

COMPARISON_MIN, COMPARISON_MAX = 1, 20
EFFECT_MIN, EFFECT_MAX = 1, 10

EQ_TOLERANCE = 0.5


class Variable(Enum):
    SPEED = "speed"
    JUMP_FORCE = "jumpforce"
    POSITION_X = "position.x"
    POSITION_Y = "position.y"


class Comparator(Enum):
    GT = ">"
    LT = "<"
    EQ = "=="


class Effect(Enum):
    ADD = "add"
    SUBTRACT = "subtract"
    MULTIPLY = "multiply"
    DIVIDE = "divide"
    RESIDUE = "residue"


class RuleSyntaxError(ValueError):
    """Raised when rule text does not match the grammar."""


class RuleRangeError(ValueError):
    """Raised when a parsed numeric operand is outside its legal range."""


def _clamp(value: int, lo: int, hi: int) -> int:
    return lo if value < lo else hi if value > hi else value


@dataclass(frozen=True, slots=True)
class Rule:
    variable: Variable
    comparator: Comparator
    comparison_value: int
    effect: Effect
    effect_value: int

    def __post_init__(self):
        object.__setattr__(
            self, "comparison_value",
            _clamp(int(self.comparison_value), COMPARISON_MIN, COMPARISON_MAX))
        object.__setattr__(
            self, "effect_value",
            _clamp(int(self.effect_value), EFFECT_MIN, EFFECT_MAX))


def random_rule(rng) -> Rule:
    """Draw a uniformly random rule from a numpy Generator."""
    return Rule(
        variable=list(Variable)[rng.integers(len(Variable))],
        comparator=list(Comparator)[rng.integers(len(Comparator))],
        comparison_value=int(rng.integers(COMPARISON_MIN, COMPARISON_MAX + 1)),
        effect=list(Effect)[rng.integers(len(Effect))],
        effect_value=int(rng.integers(EFFECT_MIN, EFFECT_MAX + 1)),
    )


def neighbors(rule: Rule, rng, count: int = 4) -> list[Rule]:
    """Draw ``count`` mutated copies of ``rule``.

    Each mutation nudges exactly one numeric operand by 1.  If the nudge
    would leave the legal range it is retried with the opposite sign, so a
    neighbor always differs from its parent.  Symbols never mutate.
    """
    out = []
    for _ in range(count):
        field = "comparison_value" if rng.integers(2) == 0 else "effect_value"
        delta = 1 if rng.integers(2) == 0 else -1
        lo, hi = ((COMPARISON_MIN, COMPARISON_MAX) if field == "comparison_value"
                  else (EFFECT_MIN, EFFECT_MAX))
        value = getattr(rule, field) + delta
        if not lo <= value <= hi:
            value = getattr(rule, field) - delta
        kwargs = {
            "variable": rule.variable,
            "comparator": rule.comparator,
            "comparison_value": rule.comparison_value,
            "effect": rule.effect,
            "effect_value": rule.effect_value,
        }
        kwargs[field] = value
        out.append(Rule(**kwargs))
    return out


def read_variable(state, variable: Variable) -> float:
    if variable is Variable.SPEED:
        return state.speed
    if variable is Variable.JUMP_FORCE:
        return state.jump_force
    if variable is Variable.POSITION_X:
        return state.position_x
    return state.position_y


def condition_holds(rule: Rule, value: float) -> bool:
    """Check the rule condition against the current variable value.

    GT/LT are strict; EQ tolerates |value - target| <= 0.5 so integer
    targets can match continuous state.
    """
    if rule.comparator is Comparator.GT:
        return value > rule.comparison_value
    if rule.comparator is Comparator.LT:
        return value < rule.comparison_value
    return abs(value - rule.comparison_value) <= EQ_TOLERANCE


def effect_result(rule: Rule, value: float) -> float:
    """Apply the rule effect to a variable value.  Pure arithmetic.

    Residue is floating-point modulo with the sign of the dividend
    (truncated-division convention).  Results are never clamped; negative
    speed or jump force are legal states.
    """
    e = rule.effect
    ev = rule.effect_value
    if e is Effect.ADD:
        return value + ev
    if e is Effect.SUBTRACT:
        return value - ev
    if e is Effect.MULTIPLY:
        return value * ev
    if e is Effect.DIVIDE:
        return value / ev
    return math.fmod(value, ev)


@dataclass(frozen=True)
class RuleApplication:
    triggered: bool
    variable: Variable
    old_value: float
    new_value: float


_VARIABLE_TOKENS = {
    "speed": Variable.SPEED,
    "jumpforce": Variable.JUMP_FORCE,
    "position.x": Variable.POSITION_X,
    "position.y": Variable.POSITION_Y,
}

_COMPARATOR_TOKENS = {">": Comparator.GT, "<": Comparator.LT, "==": Comparator.EQ}

_EFFECT_TOKENS = {
    "add": Effect.ADD,
    "subtract": Effect.SUBTRACT,
    "substract": Effect.SUBTRACT,  # legacy spelling, accepted on input only
    "multiply": Effect.MULTIPLY,
    "divide": Effect.DIVIDE,
    "residue": Effect.RESIDUE,
}


def parse_rule(text: str) -> Rule:
    """Parse canonical rule text, e.g. ``speed < 10 add 8``.

    Raises RuleSyntaxError for grammar violations and RuleRangeError when
    an operand is out of range.
    """
    tokens = text.split()
    if len(tokens) != 5:
        raise RuleSyntaxError(f"expected 5 tokens, got {len(tokens)}: {text!r}")
    var_tok, cmp_tok, comparison_tok, eff_tok, effect_tok = tokens

    variable = _VARIABLE_TOKENS.get(var_tok.lower())
    if variable is None:
        raise RuleSyntaxError(f"unknown variable {var_tok!r}")
    comparator = _COMPARATOR_TOKENS.get(cmp_tok)
    if comparator is None:
        raise RuleSyntaxError(f"unknown comparator {cmp_tok!r}")
    effect = _EFFECT_TOKENS.get(eff_tok.lower())
    if effect is None:
        raise RuleSyntaxError(f"unknown effect {eff_tok!r}")

    try:
        comparison_value = int(comparison_tok)
        effect_value = int(effect_tok)
    except ValueError as exc:
        raise RuleSyntaxError(f"operands must be integers: {text!r}") from exc

    if not COMPARISON_MIN <= comparison_value <= COMPARISON_MAX:
        raise RuleRangeError(
            f"comparison value {comparison_value} outside "
            f"[{COMPARISON_MIN}, {COMPARISON_MAX}]")
    if not EFFECT_MIN <= effect_value <= EFFECT_MAX:
        raise RuleRangeError(
            f"effect value {effect_value} outside [{EFFECT_MIN}, {EFFECT_MAX}]")

    return Rule(variable, comparator, comparison_value, effect, effect_value)


def format_rule(rule: Rule) -> str:
    """Render a rule in canonical text form; inverse of parse_rule."""
    return (f"{rule.variable.value} {rule.comparator.value} "
            f"{rule.comparison_value} {rule.effect.value} {rule.effect_value}")
