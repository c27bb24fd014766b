"""Random well-formed programs for round-trip and termination testing."""

from __future__ import annotations

import numpy as np

from .ast import MAX_NESTING, SKILLS, Assign, Binary, Bool, Call, CallStmt, If, Int, Let, Program, Unary, Var, While

_ARITH = ("+", "-", "*")
_CMP = ("<", "<=", ">", ">=", "==", "!=")


class _Gen:
    def __init__(self, rng: np.random.Generator, max_depth: int):
        self.rng = rng
        self.max_depth = max_depth
        self.counter = 0

    def pick(self, seq):
        return seq[int(self.rng.integers(len(seq)))]

    def fresh(self) -> str:
        self.counter += 1
        return f"v{self.counter}"

    def num(self, env, depth):
        r = self.rng.random()
        nums = [n for n, t in env.items() if t == "num"]
        if depth <= 0 or r < 0.3:
            if nums and self.rng.random() < 0.5:
                return Var(self.pick(nums))
            return Int(int(self.rng.integers(0, 10)))
        if r < 0.45:
            return Unary("-", self.num(env, depth - 1))
        if r < 0.55:
            return Call(self.pick(("min", "max")), (self.num(env, depth - 1), self.num(env, depth - 1)))
        if r < 0.62:
            return Call("rand")
        return Binary(self.pick(_ARITH), self.num(env, depth - 1), self.num(env, depth - 1))

    def boolean(self, env, depth):
        r = self.rng.random()
        bools = [n for n, t in env.items() if t == "bool"]
        if depth <= 0 or r < 0.25:
            if bools and self.rng.random() < 0.5:
                return Var(self.pick(bools))
            return Bool(bool(self.rng.random() < 0.5))
        if r < 0.4:
            return Unary("not", self.boolean(env, depth - 1))
        if r < 0.55:
            return Binary(self.pick(("and", "or")), self.boolean(env, depth - 1), self.boolean(env, depth - 1))
        if r < 0.75:
            return self.skill()
        return Binary(self.pick(_CMP), self.num(env, depth - 1), self.num(env, depth - 1))

    def skill(self):
        name = self.pick(SKILLS)
        return Call(name, (Var("part"),) if name == "grasp" else ())

    def block(self, env, nesting, n):
        env = dict(env)
        local: set[str] = set()
        out = []
        for _ in range(n):
            out.append(self.stmt(env, local, nesting))
        return tuple(out)

    def stmt(self, env, local, nesting):
        r = self.rng.random()
        can_nest = nesting < min(MAX_NESTING, self.max_depth)
        if r < 0.25:
            name = self.fresh()
            kind = "num" if self.rng.random() < 0.6 else "bool"
            value = self.num(env, 2) if kind == "num" else self.boolean(env, 2)
            env[name] = kind
            local.add(name)
            return Let(name, value)
        if r < 0.4 and env:
            name = self.pick(sorted(env))
            return Assign(name, self.num(env, 2) if env[name] == "num" else self.boolean(env, 2))
        if r < 0.55 and can_nest:
            return While(self.boolean(env, 2), self.block(env, nesting + 1, int(self.rng.integers(0, 3))))
        if r < 0.7 and can_nest:
            then = self.block(env, nesting + 1, int(self.rng.integers(0, 3)))
            orelse = None
            if self.rng.random() < 0.5:
                orelse = self.block(env, nesting + 1, int(self.rng.integers(0, 3)))
            return If(self.boolean(env, 2), then, orelse)
        return CallStmt(self.skill())


def random_program(rng: np.random.Generator | int, max_statements: int = 8, max_depth: int = 4) -> Program:
    """A program that passes the static checks; it may loop until its budget runs out."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    g = _Gen(rng, max_depth)
    n = int(rng.integers(1, max_statements + 1))
    return Program(g.block({}, 0, n))
