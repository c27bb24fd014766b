"""Canonical source text for skill programs (2-space indentation)."""

from __future__ import annotations

from .ast import COMPARISONS, PREC, Assign, Binary, Bool, Call, CallStmt, If, Int, Let, Program, Unary, Var, While, prec

INDENT = "  "


def print_expr(node) -> str:
    if isinstance(node, Int):
        return str(node.value)
    if isinstance(node, Bool):
        return "true" if node.value else "false"
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.name}({', '.join(print_expr(a) for a in node.args)})"
    if isinstance(node, Unary):
        if node.op == "not":
            return "not " + _wrap(node.operand, PREC["not"])
        inner = _wrap(node.operand, PREC["neg"])
        return "-" + (" " + inner if inner.startswith("-") else inner)
    if isinstance(node, Binary):
        p = prec(node)
        if node.op in COMPARISONS:
            left, right = _wrap(node.left, p + 1), _wrap(node.right, p + 1)
        else:
            left, right = _wrap(node.left, p), _wrap(node.right, p + 1)
        return f"{left} {node.op} {right}"
    raise TypeError(f"not an expression: {node!r}")


def _wrap(node, min_prec: int) -> str:
    text = print_expr(node)
    return f"({text})" if prec(node) < min_prec else text


def _stmt(node, depth: int, out: list[str]) -> None:
    pad = INDENT * depth
    if isinstance(node, Let):
        out.append(f"{pad}let {node.name} = {print_expr(node.value)}")
    elif isinstance(node, Assign):
        out.append(f"{pad}{node.name} = {print_expr(node.value)}")
    elif isinstance(node, CallStmt):
        out.append(pad + print_expr(node.call))
    elif isinstance(node, While):
        out.append(f"{pad}while {print_expr(node.cond)} {{")
        _body(node.body, depth + 1, out)
        out.append(pad + "}")
    elif isinstance(node, If):
        head = f"{pad}if {print_expr(node.cond)} {{"
        out.append(head)
        _body(node.then, depth + 1, out)
        while node.orelse is not None:
            if len(node.orelse) == 1 and isinstance(node.orelse[0], If):
                node = node.orelse[0]
                out.append(f"{pad}}} else if {print_expr(node.cond)} {{")
                _body(node.then, depth + 1, out)
                continue
            out.append(pad + "} else {")
            _body(node.orelse, depth + 1, out)
            break
        out.append(pad + "}")
    else:
        raise TypeError(f"not a statement: {node!r}")


def _body(stmts, depth, out):
    for s in stmts:
        _stmt(s, depth, out)


def print_program(prog: Program) -> str:
    out: list[str] = []
    _body(prog.body, 0, out)
    return "".join(line + "\n" for line in out)
