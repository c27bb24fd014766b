from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from stub_server import json_endpoint

from artimanip.grounding import RemoteClient
from artimanip.program import (
    SKILLS,
    CodegenError,
    OfflineCodegen,
    ParseError,
    RemoteCodegen,
    SkillRuntime,
    canned_program,
    interpret,
    parse_program,
    print_expr,
    print_program,
    random_program,
    tokenize,
)
from artimanip.program.ast import Binary, Call, If, Int, Let, Unary, Var, While
from artimanip.scene import CATEGORIES
from artimanip.skills import SkillResult


def counter_bindings(succeed_after: int = 0, goal_after: int | None = None):
    """Skills that fail ``succeed_after`` times, then succeed; optional goal."""
    calls = []

    def make(name):
        def fn(*_):
            calls.append(name)
            return SkillResult(len(calls) > succeed_after, 1, 0.0)

        return fn

    goal = (lambda: len(calls) >= goal_after) if goal_after is not None else None
    return {name: make(name) for name in SKILLS}, goal, calls


def run(source, budget=50, seed=0, **kw):
    bindings, goal, calls = counter_bindings(**kw)
    trace = interpret(parse_program(source), SkillRuntime(budget, bindings=bindings, goal=goal), seed=seed)
    return trace, calls


# --- parsing -----------------------------------------------------------------


def test_tokenize_skips_comments_and_tracks_positions():
    toks = tokenize("let x = 1 # note\n  x = x + 2")
    kinds = [t.text for t in toks if t.text]
    assert kinds == ["let", "x", "=", "1", "x", "=", "x", "+", "2"]
    assert (toks[4].line, toks[4].col) == (2, 3)


def test_precedence_and_associativity():
    prog = parse_program("let a = 1 + 2 * 3 - 4\nlet b = not a < 2 or true and false")
    a = prog.body[0].value
    assert a == Binary("-", Binary("+", Int(1), Binary("*", Int(2), Int(3))), Int(4))
    b = prog.body[1].value
    assert b.op == "or" and b.left == Unary("not", Binary("<", Var("a"), Int(2)))


def test_else_if_chain():
    prog = parse_program("let x = 1\nif x < 0 { x = 0 } else if x > 5 { x = 5 } else { x = 2 }")
    st_ = prog.body[1]
    assert isinstance(st_, If) and isinstance(st_.orelse[0], If)


def test_semicolons_and_calls():
    prog = parse_program("grasp(part); while pull_part() { }")
    assert prog.body[0].call == Call("grasp", (Var("part"),))
    assert isinstance(prog.body[1], While)


@pytest.mark.parametrize(
    "source, fragment",
    [
        ("let = 3", "expected"),
        ("let x = 1 < 2 < 3", "line 1"),
        ("while true {", "line 1"),
        ("x = 1", "undefined"),
        ("let x = 1\nlet x = 2", "already defined"),
        ("let rand = 1", "builtin"),
        ("pull_part(1)", "argument"),
        ("let y = $", "unexpected character"),
        ("fly()", "unknown"),
    ],
)
def test_parse_errors(source, fragment):
    with pytest.raises(ParseError) as exc:
        parse_program(source)
    assert fragment in str(exc.value)
    assert exc.value.line >= 1 and exc.value.col >= 1


def test_error_position_points_at_offending_token():
    with pytest.raises(ParseError) as exc:
        parse_program("let a = 1\nlet b = a +\n")
    assert exc.value.line in (2, 3)


def test_nesting_limit():
    deep = "if true { " * 9 + "}" * 9
    with pytest.raises(ParseError, match="nest"):
        parse_program(deep)
    parse_program("if true { " * 8 + "}" * 8)
    chain = "let x = 1\n" + "if x == 0 { } " + "else if x == 1 { } " * 12
    parse_program(chain)


def test_shadowing_in_inner_block_is_allowed():
    trace, _ = run("let x = 1\nif true { let x = 2 }\nif x == 1 { pull_part() }")
    assert trace.count("pull_part") == 1


# --- printing ----------------------------------------------------------------


def test_printer_minimal_parentheses():
    e = parse_program("let a = (1 + 2) * 3 - (4 - 5)").body[0].value
    assert print_expr(e) == "(1 + 2) * 3 - (4 - 5)"
    assert print_expr(Unary("-", Unary("-", Var("x")))) == "- -x"
    assert print_expr(Unary("-", Int(-3))) == "- -3"


def test_printer_layout():
    src = "let n = 0\nwhile n < 2 {\n  n = n + 1\n} \nif n == 2 { pull_part() } else if n == 3 { push_part() } else { release() }"
    text = print_program(parse_program(src))
    assert "} else if n == 3 {" in text
    assert "\n  n = n + 1\n" in text


@given(st.integers(0, 10_000))
def test_round_trip_random_programs(seed):
    prog = random_program(seed)
    text = print_program(prog)
    assert parse_program(text) == prog
    assert print_program(parse_program(text)) == text


@pytest.mark.parametrize("category", CATEGORIES)
def test_canned_programs_round_trip(category):
    src = canned_program(category)
    prog = parse_program(src)
    assert parse_program(print_program(prog)) == prog


# --- interpretation ----------------------------------------------------------


def test_empty_program_stops_for_budget():
    trace, calls = run("")
    assert trace.terminated_by == "budget" and not trace.success and calls == []


def test_goal_already_met_runs_nothing():
    trace, calls = run("pull_part()", goal_after=0)
    assert trace.terminated_by == "goal" and trace.success and calls == []


def test_goal_stops_mid_program():
    trace, calls = run("while true { pull_part() }", goal_after=3)
    assert trace.success and trace.steps_used == 3


def test_budget_caps_skill_calls():
    trace, calls = run("while true { rotate_cw() }", budget=7)
    assert trace.terminated_by == "budget" and len(calls) == 7


def test_fuel_stops_skill_free_loops():
    trace, calls = run("let n = 0\nwhile true { n = n + 1 }", budget=3)
    assert trace.terminated_by == "budget" and calls == []


def test_skill_results_drive_control_flow():
    trace, calls = run("while not pull_part() { rotate_ccw() }", succeed_after=5)
    assert calls == ["pull_part", "rotate_ccw"] * 2 + ["pull_part", "rotate_ccw", "pull_part"]


@pytest.mark.parametrize(
    "source, message",
    [
        ("if 1 { }", "boolean"),
        ("let x = true + 1", "number"),
        ("let x = 1 == true", "compare"),
        ("grasp(3)", "part"),
        ("let x = 9223372036854775807 + 1", "overflow"),
    ],
)
def test_runtime_faults(source, message):
    trace, _ = run(source)
    assert trace.terminated_by == "error" and message in trace.error
    assert trace.error_stage == "program"


def test_skill_exception_is_a_skill_error():
    from artimanip.skills import SkillError

    def boom(*_):
        raise SkillError("arm stuck")

    trace = interpret(parse_program("pull_part()"), SkillRuntime(5, bindings={"pull_part": boom}))
    assert trace.terminated_by == "error" and trace.error_stage == "skill" and "arm stuck" in trace.error
    assert trace.steps_used == 1 and not trace.calls[0].success


def test_rand_is_seeded():
    src = "let n = 0\nwhile n < 20 { if rand() * 2 < 1 { rotate_cw() } else { rotate_ccw() }\n n = n + 1 }"
    a, _ = run(src, seed=4)
    b, _ = run(src, seed=4)
    c, _ = run(src, seed=5)
    assert a.to_bytes() == b.to_bytes()
    assert a.to_bytes() != c.to_bytes()


def test_min_max_and_short_circuit():
    trace, calls = run("if max(1, 4) - min(2, 3) == 2 and true { pull_part() }\nif false and pull_part() { }")
    assert calls == ["pull_part"]


def test_trace_serialization_ends_with_summary():
    trace, _ = run("pull_part()", goal_after=1)
    lines = trace.to_lines().splitlines()
    assert len(lines) == 2 and '"end":"goal"' in lines[-1]


# --- code generation ---------------------------------------------------------


def test_canned_program_uses_category_motion_and_direction():
    assert "rotate_ccw()" in canned_program("bottle") and "pull_part()" in canned_program("bottle")
    assert "move_arc_pos()" in canned_program("door") and "rotate_cw()" in canned_program("door")
    assert "rotate_cw()" in canned_program("pen", "cw")
    assert OfflineCodegen()({"category": "window"}) == canned_program("window")


def test_canned_loop_rotates_before_opening():
    bindings, goal, calls = counter_bindings()
    # rotations succeed, the opening motion only after 4 rotations
    rotations = []

    def rotate(*_):
        rotations.append(1)
        return SkillResult(True, 1, 0.0)

    def pull(*_):
        calls.append("pull_part")
        return SkillResult(len(rotations) >= 4 and calls.count("pull_part") < 8, 1, 0.0)

    bindings.update(rotate_ccw=rotate, pull_part=pull)
    trace = interpret(parse_program(canned_program("bottle")), SkillRuntime(200, bindings=bindings), seed=1)
    assert len(rotations) >= 4 and trace.count("pull_part") >= 2


def test_remote_codegen_repairs_parse_errors():
    replies = iter(["while {", canned_program("pen")])
    with json_endpoint(lambda req: {"version": 1, "text": next(replies)}) as (url, log):
        text = RemoteCodegen(RemoteClient(url, timeout=5, retries=0))({"category": "pen"})
    assert text == canned_program("pen")
    assert len(log) == 2 and log[0]["stage"] == "codegen"
    assert "does not parse" in log[1]["messages"][-1]["content"]


def test_remote_codegen_gives_up():
    with json_endpoint(lambda req: {"version": 1, "text": "let"}) as (url, log):
        with pytest.raises(CodegenError, match="repairs"):
            RemoteCodegen(RemoteClient(url, timeout=5, retries=0), repairs=1)({"category": "pen"})
    assert len(log) == 2


def test_remote_codegen_transport_failure():
    with json_endpoint(lambda req: {}, fail_first=5) as (url, _):
        with pytest.raises(CodegenError):
            RemoteCodegen(RemoteClient(url, timeout=5, retries=1))({"category": "pen"})


def test_fuzzer_ast_shapes():
    prog = random_program(3, max_statements=4, max_depth=2)
    assert 0 <= len(prog.body) <= 4
    assert all(isinstance(s, (Let, If, While)) or hasattr(s, "call") or hasattr(s, "name") for s in prog.body)
