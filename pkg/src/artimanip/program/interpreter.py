"""Budgeted, seeded evaluation of skill programs.

Every skill call costs one unit of the call budget; every evaluated node
costs one unit of fuel (``FUEL_PER_CALL`` per budget unit), so loops that
never call a skill still terminate.  Execution stops on the first of:

* the goal predicate holding (checked before running and after each skill call),
* the call budget or the fuel running out, or the program running off its
  end without reaching the goal (``terminated_by="budget"``),
* a runtime error (``terminated_by="error"``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..scene.objects import MechanismError
from ..skills.actions import SkillResult, SkillSim, exec_rotate, exec_translate, grasp, release
from ..skills.control import SkillError
from .ast import COMPARISONS, SKILLS, Assign, Binary, Bool, Call, CallStmt, If, Int, Let, Program, Unary, Var, While

FUEL_PER_CALL = 100
INT_LIMIT = 2**63


class PartRef:
    """Value of the predefined ``part`` name: the grounded part."""

    def __repr__(self):
        return "part"


class RuntimeFault(RuntimeError):
    pass


class _Halt(Exception):
    def __init__(self, reason: str, message: str = "", stage: str = "program"):
        self.reason = reason
        self.message = message
        self.stage = stage


@dataclass
class TraceEntry:
    index: int
    skill: str
    success: bool
    steps: int = 0
    joint_value: float | None = None

    def to_record(self) -> dict:
        return {"i": self.index, "skill": self.skill, "success": self.success, "steps": self.steps, "joint": self.joint_value}


@dataclass
class ExecutionTrace:
    calls: list[TraceEntry] = field(default_factory=list)
    success: bool = False
    terminated_by: str = "budget"
    error: str = ""
    error_stage: str = ""  # "skill" or "program" when terminated_by == "error"

    @property
    def steps_used(self) -> int:
        return len(self.calls)

    def count(self, skill: str) -> int:
        return sum(1 for c in self.calls if c.skill == skill)

    def to_lines(self) -> str:
        recs = [c.to_record() for c in self.calls]
        recs.append({"end": self.terminated_by, "success": self.success, "calls": self.steps_used, "error": self.error, "stage": self.error_stage})
        return "".join(json.dumps(r, sort_keys=True, separators=(",", ":")) + "\n" for r in recs)

    def to_bytes(self) -> bytes:
        return self.to_lines().encode("utf-8")


@dataclass
class SkillRuntime:
    """Budget, current affordance result and optional binding overrides.

    ``bindings`` maps skill names to callables returning a
    :class:`SkillResult` (``grasp`` receives the part value); entries
    override the simulator-backed defaults.  ``goal`` overrides the
    simulator's goal predicate.
    """

    budget: int = 200
    affordance: tuple | None = None  # (scores, cloud)
    bindings: dict = field(default_factory=dict)
    goal: object = None

    def __post_init__(self):
        if self.budget <= 0:
            raise ValueError("budget must be positive")


def sim_bindings(sim: SkillSim, rt: SkillRuntime) -> dict:
    def do_grasp(_part):
        if rt.affordance is None:
            raise SkillError("grasp needs an affordance result")
        return grasp(sim, *rt.affordance)

    return {
        "grasp": do_grasp,
        "pull_part": lambda: exec_translate(sim, "gripper-z", 1),
        "push_part": lambda: exec_translate(sim, "gripper-z", -1),
        "move_arc_pos": lambda: exec_translate(sim, "object-arc-y", 1),
        "move_arc_neg": lambda: exec_translate(sim, "object-arc-y", -1),
        "rotate_cw": lambda: exec_rotate(sim, "cw"),
        "rotate_ccw": lambda: exec_rotate(sim, "ccw"),
        "release": lambda: release(sim),
    }


class _Machine:
    def __init__(self, rt: SkillRuntime, bindings: dict, goal, sim: SkillSim | None, seed: int):
        self.rt = rt
        self.bindings = bindings
        self.goal = goal
        self.sim = sim
        self.rng = np.random.default_rng(seed)
        self.fuel = rt.budget * FUEL_PER_CALL
        self.trace = ExecutionTrace()

    def tick(self):
        self.fuel -= 1
        if self.fuel < 0:
            raise _Halt("budget", "evaluation fuel exhausted")

    def run(self, prog: Program) -> ExecutionTrace:
        try:
            if self.goal():
                raise _Halt("goal")
            self.block(prog.body, [{"part": PartRef()}])
            raise _Halt("budget", "program ended before the goal")
        except _Halt as h:
            self.trace.terminated_by = h.reason
            if h.reason == "error":
                self.trace.error, self.trace.error_stage = h.message, h.stage
        self.trace.success = bool(self.goal())
        return self.trace

    # statements

    def block(self, body, scopes):
        scopes = scopes + [{}]
        for st in body:
            self.stmt(st, scopes)

    def stmt(self, st, scopes):
        self.tick()
        if isinstance(st, Let):
            scopes[-1][st.name] = self.eval(st.value, scopes)
        elif isinstance(st, Assign):
            for s in reversed(scopes):
                if st.name in s:
                    s[st.name] = self.eval(st.value, scopes)
                    return
            self.fault(f"assignment to undefined variable {st.name!r}")
        elif isinstance(st, CallStmt):
            self.eval(st.call, scopes)
        elif isinstance(st, While):
            while self.truth(self.eval(st.cond, scopes)):
                self.block(st.body, scopes)
                self.tick()
        elif isinstance(st, If):
            if self.truth(self.eval(st.cond, scopes)):
                self.block(st.then, scopes)
            elif st.orelse is not None:
                self.block(st.orelse, scopes)
        else:
            self.fault(f"unknown statement {type(st).__name__}")

    # expressions

    def fault(self, message):
        raise _Halt("error", message)

    def truth(self, v) -> bool:
        if not isinstance(v, bool):
            self.fault(f"condition must be a boolean, got {_kind(v)}")
        return v

    def number(self, v):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fault(f"expected a number, got {_kind(v)}")
        return v

    def checked(self, v):
        if isinstance(v, int) and not -INT_LIMIT <= v < INT_LIMIT:
            self.fault("integer overflow")
        return v

    def eval(self, node, scopes):
        self.tick()
        if isinstance(node, Int):
            return node.value
        if isinstance(node, Bool):
            return node.value
        if isinstance(node, Var):
            for s in reversed(scopes):
                if node.name in s:
                    return s[node.name]
            self.fault(f"unknown identifier {node.name!r}")
        if isinstance(node, Unary):
            v = self.eval(node.operand, scopes)
            if node.op == "not":
                return not self.truth(v)
            return self.checked(-self.number(v))
        if isinstance(node, Binary):
            return self.binary(node, scopes)
        if isinstance(node, Call):
            return self.call(node, scopes)
        self.fault(f"unknown expression {type(node).__name__}")

    def binary(self, node, scopes):
        op = node.op
        if op in ("and", "or"):
            left = self.truth(self.eval(node.left, scopes))
            if (op == "and") != left:  # short circuit
                return left
            return self.truth(self.eval(node.right, scopes))
        a, b = self.eval(node.left, scopes), self.eval(node.right, scopes)
        if op in ("==", "!="):
            if isinstance(a, bool) != isinstance(b, bool) or isinstance(a, PartRef) or isinstance(b, PartRef):
                self.fault(f"cannot compare {_kind(a)} with {_kind(b)}")
            return (a == b) if op == "==" else (a != b)
        a, b = self.number(a), self.number(b)
        if op in COMPARISONS:
            return {"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[op]
        if op == "+":
            return self.checked(a + b)
        if op == "-":
            return self.checked(a - b)
        if op == "*":
            return self.checked(a * b)
        self.fault(f"unknown operator {op!r}")

    def call(self, node, scopes):
        args = [self.eval(a, scopes) for a in node.args]
        name = node.name
        if name == "rand":
            return float(self.rng.random())
        if name in ("min", "max"):
            a, b = (self.number(x) for x in args)
            return min(a, b) if name == "min" else max(a, b)
        if name not in SKILLS:
            self.fault(f"unknown function {name!r}")
        if name == "grasp" and not isinstance(args[0], PartRef):
            self.fault(f"grasp expects the part, got {_kind(args[0])}")
        if len(self.trace.calls) >= self.rt.budget:
            raise _Halt("budget", "skill-call budget exhausted")
        fn = self.bindings.get(name)
        if fn is None:
            self.fault(f"no binding for skill {name!r}")
        try:
            res = fn(*args)
        except (SkillError, MechanismError, RuntimeFault) as exc:
            self.trace.calls.append(TraceEntry(len(self.trace.calls), name, False))
            raise _Halt("error", f"{name}: {exc}", "skill") from None
        if isinstance(res, SkillResult):
            ok, steps = res.success, res.steps
            joint = None if res.feedback is None else float(res.feedback.joint_value)
        else:
            ok, steps, joint = bool(res), 0, None
        self.trace.calls.append(TraceEntry(len(self.trace.calls), name, ok, steps, joint))
        if self.goal():
            raise _Halt("goal")
        return ok


def _kind(v) -> str:
    if isinstance(v, bool):
        return "boolean"
    if isinstance(v, (int, float)):
        return "number"
    if isinstance(v, PartRef):
        return "part"
    return type(v).__name__


def interpret(prog: Program, rt: SkillRuntime, sim: SkillSim | None = None, seed: int = 0) -> ExecutionTrace:
    bindings = sim_bindings(sim, rt) if sim is not None else {}
    bindings.update(rt.bindings)
    if rt.goal is not None:
        goal = rt.goal
    elif sim is not None:
        goal = sim.obj.goal_reached
    else:
        goal = lambda: False  # noqa: E731
    return _Machine(rt, bindings, goal, sim, seed).run(prog)
