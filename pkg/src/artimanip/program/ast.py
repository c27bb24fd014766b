"""Syntax tree of skill programs.

Source positions are carried for diagnostics but excluded from equality, so
``parse(print(p)) == p`` compares structure only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

Pos = tuple[int, int]  # (line, column), 1-based


def _pos():
    return field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Int:
    value: int
    pos: Pos = _pos()


@dataclass(frozen=True)
class Bool:
    value: bool
    pos: Pos = _pos()


@dataclass(frozen=True)
class Var:
    name: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple = ()
    pos: Pos = _pos()


@dataclass(frozen=True)
class Unary:
    op: str  # "-" or "not"
    operand: object
    pos: Pos = _pos()


@dataclass(frozen=True)
class Binary:
    op: str
    left: object
    right: object
    pos: Pos = _pos()


@dataclass(frozen=True)
class Let:
    name: str
    value: object
    pos: Pos = _pos()


@dataclass(frozen=True)
class Assign:
    name: str
    value: object
    pos: Pos = _pos()


@dataclass(frozen=True)
class While:
    cond: object
    body: tuple
    pos: Pos = _pos()


@dataclass(frozen=True)
class If:
    cond: object
    then: tuple
    orelse: tuple | None = None
    pos: Pos = _pos()


@dataclass(frozen=True)
class CallStmt:
    call: Call
    pos: Pos = _pos()


@dataclass(frozen=True)
class Program:
    body: tuple = ()


# precedence, loosest first; comparisons do not chain
PREC = {"or": 1, "and": 2, "not": 3, "cmp": 4, "+": 5, "-": 5, "*": 6, "neg": 7, "atom": 8}
COMPARISONS = ("<", "<=", ">", ">=", "==", "!=")

SKILLS = ("grasp", "pull_part", "push_part", "rotate_cw", "rotate_ccw", "move_arc_pos", "move_arc_neg", "release")
FUNCTIONS = {"rand": 0, "min": 2, "max": 2}
ARITY = {**{name: 0 for name in SKILLS}, "grasp": 1, **FUNCTIONS}
PREDEFINED = ("part",)
KEYWORDS = ("let", "while", "if", "else", "and", "or", "not", "true", "false")
MAX_NESTING = 8


def prec(node) -> int:
    if isinstance(node, Binary):
        return PREC["cmp"] if node.op in COMPARISONS else PREC[node.op]
    if isinstance(node, Unary):
        return PREC["not"] if node.op == "not" else PREC["neg"]
    return PREC["atom"]
