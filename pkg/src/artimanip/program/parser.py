"""Tokenizer, recursive-descent parser and static checks for skill programs.

Grammar (EBNF)::

    program  = { stmt } ;
    stmt     = "let" NAME "=" expr | NAME "=" expr | call
             | "while" expr block | "if" expr block [ "else" ( block | if ) ] ;
    block    = "{" { stmt } "}" ;
    expr     = and { "or" and } ;
    and      = not { "and" not } ;
    not      = "not" not | cmp ;
    cmp      = sum [ ( "<" | "<=" | ">" | ">=" | "==" | "!=" ) sum ] ;
    sum      = term { ( "+" | "-" ) term } ;
    term     = unary { "*" unary } ;
    unary    = "-" unary | atom ;
    atom     = INT | "true" | "false" | NAME | call | "(" expr ")" ;
    call     = NAME "(" [ expr { "," expr } ] ")" ;

Newlines are insignificant; ``;`` may separate statements; ``#`` starts a
comment running to the end of the line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .ast import (
    ARITY,
    COMPARISONS,
    KEYWORDS,
    MAX_NESTING,
    PREDEFINED,
    Assign,
    Binary,
    Bool,
    Call,
    CallStmt,
    If,
    Int,
    Let,
    Program,
    Unary,
    Var,
    While,
)
from .ast import SKILLS


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int, expected=()):
        self.line, self.col = line, col
        self.expected = frozenset(expected)
        self.reason = message
        exp = f" (expected one of: {', '.join(sorted(self.expected))})" if self.expected else ""
        super().__init__(f"line {line}, column {col}: {message}{exp}")


@dataclass(frozen=True)
class Token:
    kind: str  # INT, NAME, keyword text, symbol text, EOF
    text: str
    line: int
    col: int


_TOKEN = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>#[^\n]*)|(?P<int>[0-9]+)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<sym>==|!=|<=|>=|[<>=+\-*(){},;])"
)


def tokenize(source: str) -> list[Token]:
    out, line, start, i = [], 1, 0, 0
    while i < len(source):
        m = _TOKEN.match(source, i)
        col = i - start + 1
        if m is None:
            raise ParseError(f"unexpected character {source[i]!r}", line, col)
        kind = m.lastgroup
        text = m.group()
        if kind == "nl":
            line += 1
            start = m.end()
        elif kind == "int":
            out.append(Token("INT", text, line, col))
        elif kind == "name":
            out.append(Token(text if text in KEYWORDS else "NAME", text, line, col))
        elif kind == "sym":
            out.append(Token(text, text, line, col))
        i = m.end()
    out.append(Token("EOF", "", line, i - start + 1))
    return out


_EXPR_START = frozenset({"INT", "NAME", "true", "false", "(", "-", "not"})
_STMT_START = frozenset({"let", "while", "if", "NAME"})


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def fail(self, expected, what: str | None = None):
        t = self.tok
        found = "end of input" if t.kind == "EOF" else repr(t.text)
        raise ParseError(what or f"unexpected {found}", t.line, t.col, expected)

    def eat(self, kind: str) -> Token:
        if self.tok.kind != kind:
            self.fail({kind})
        t = self.tok
        self.i += 1
        return t

    def accept(self, kind: str) -> bool:
        if self.tok.kind == kind:
            self.i += 1
            return True
        return False

    # statements

    def program(self) -> Program:
        body = self.stmts(top=True)
        return Program(tuple(body))

    def stmts(self, top: bool) -> list:
        out = []
        end = "EOF" if top else "}"
        while True:
            while self.accept(";"):
                pass
            if self.tok.kind == end:
                return out
            if self.tok.kind not in _STMT_START:
                self.fail(set(_STMT_START) | {end})
            out.append(self.stmt())

    def block(self) -> tuple:
        self.eat("{")
        body = self.stmts(top=False)
        self.eat("}")
        return tuple(body)

    def stmt(self):
        t = self.tok
        pos = (t.line, t.col)
        if t.kind == "let":
            self.i += 1
            name = self.eat("NAME").text
            self.eat("=")
            return Let(name, self.expr(), pos)
        if t.kind == "while":
            self.i += 1
            cond = self.expr()
            return While(cond, self.block(), pos)
        if t.kind == "if":
            return self.if_stmt()
        # NAME: assignment or call
        if self.peek().kind == "=":
            name = self.eat("NAME").text
            self.eat("=")
            return Assign(name, self.expr(), pos)
        if self.peek().kind == "(":
            return CallStmt(self.call(), pos)
        self.i += 1
        self.fail({"=", "("})

    def if_stmt(self) -> If:
        t = self.eat("if")
        cond = self.expr()
        then = self.block()
        orelse = None
        if self.accept("else"):
            orelse = (self.if_stmt(),) if self.tok.kind == "if" else self.block()
        return If(cond, then, orelse, (t.line, t.col))

    # expressions

    def expr(self):
        if self.tok.kind not in _EXPR_START:
            self.fail(_EXPR_START, "expected an expression")
        node = self.and_()
        while self.tok.kind == "or":
            t = self.eat("or")
            node = Binary("or", node, self.and_(), (t.line, t.col))
        return node

    def and_(self):
        node = self.not_()
        while self.tok.kind == "and":
            t = self.eat("and")
            node = Binary("and", node, self.not_(), (t.line, t.col))
        return node

    def not_(self):
        if self.tok.kind == "not":
            t = self.eat("not")
            return Unary("not", self.not_(), (t.line, t.col))
        return self.cmp()

    def cmp(self):
        node = self.sum()
        if self.tok.kind in COMPARISONS:
            t = self.tok
            self.i += 1
            node = Binary(t.kind, node, self.sum(), (t.line, t.col))
            if self.tok.kind in COMPARISONS:
                self.fail(set(), "comparisons cannot be chained; add parentheses")
        return node

    def sum(self):
        node = self.term()
        while self.tok.kind in ("+", "-"):
            t = self.tok
            self.i += 1
            node = Binary(t.kind, node, self.term(), (t.line, t.col))
        return node

    def term(self):
        node = self.unary()
        while self.tok.kind == "*":
            t = self.eat("*")
            node = Binary("*", node, self.unary(), (t.line, t.col))
        return node

    def unary(self):
        if self.tok.kind == "-":
            t = self.eat("-")
            return Unary("-", self.unary(), (t.line, t.col))
        return self.atom()

    def atom(self):
        t = self.tok
        pos = (t.line, t.col)
        if t.kind == "INT":
            self.i += 1
            return Int(int(t.text), pos)
        if t.kind in ("true", "false"):
            self.i += 1
            return Bool(t.kind == "true", pos)
        if t.kind == "NAME":
            if self.peek().kind == "(":
                return self.call()
            self.i += 1
            return Var(t.text, pos)
        if t.kind == "(":
            self.i += 1
            node = self.expr()
            self.eat(")")
            return node
        self.fail(_EXPR_START, "expected an expression")

    def call(self) -> Call:
        t = self.eat("NAME")
        self.eat("(")
        args = []
        if self.tok.kind != ")":
            args.append(self.expr())
            while self.accept(","):
                args.append(self.expr())
        if self.tok.kind != ")":
            self.fail({",", ")"})
        self.eat(")")
        return Call(t.text, tuple(args), (t.line, t.col))


# --- static checks -----------------------------------------------------------


def check_program(prog: Program) -> None:
    """Raise ParseError on unknown or undefined names, bad arity or deep nesting."""
    _check_block(prog.body, [set(PREDEFINED)], 0)


def _err(node, message):
    line, col = node.pos if hasattr(node, "pos") else (0, 0)
    raise ParseError(message, line, col)


def _defined(scopes, name) -> bool:
    return any(name in s for s in scopes)


def _check_block(body, scopes, depth):
    scopes = scopes + [set()]
    for st in body:
        if isinstance(st, Let):
            if st.name in ARITY or st.name in PREDEFINED:
                _err(st, f"cannot define {st.name!r}: it names a builtin")
            _check_expr(st.value, scopes)
            if st.name in scopes[-1]:
                _err(st, f"{st.name!r} is already defined in this block")
            scopes[-1].add(st.name)
        elif isinstance(st, Assign):
            if st.name in PREDEFINED:
                _err(st, f"cannot assign to {st.name!r}")
            if not _defined(scopes, st.name):
                _err(st, f"assignment to undefined variable {st.name!r}")
            _check_expr(st.value, scopes)
        elif isinstance(st, CallStmt):
            _check_expr(st.call, scopes)
        elif isinstance(st, (While, If)):
            if depth + 1 > MAX_NESTING:
                _err(st, f"blocks nested deeper than {MAX_NESTING}")
            _check_expr(st.cond, scopes)
            if isinstance(st, While):
                _check_block(st.body, scopes, depth + 1)
            else:
                _check_block(st.then, scopes, depth + 1)
                if st.orelse is not None:
                    # an `else if` chain stays at the same nesting level
                    chained = len(st.orelse) == 1 and isinstance(st.orelse[0], If)
                    _check_block(st.orelse, scopes, depth if chained else depth + 1)
        else:
            _err(st, f"unknown statement {type(st).__name__}")


def _check_expr(node, scopes):
    if isinstance(node, (Int, Bool)):
        return
    if isinstance(node, Var):
        if node.name in ARITY:
            _err(node, f"{node.name!r} is a function; call it as {node.name}()")
        if not _defined(scopes, node.name):
            _err(node, f"unknown identifier {node.name!r}")
        return
    if isinstance(node, Call):
        if node.name not in ARITY:
            _err(node, f"unknown function {node.name!r}")
        if len(node.args) != ARITY[node.name]:
            _err(node, f"{node.name}() takes {ARITY[node.name]} argument(s), got {len(node.args)}")
        for a in node.args:
            _check_expr(a, scopes)
        return
    if isinstance(node, Unary):
        _check_expr(node.operand, scopes)
        return
    if isinstance(node, Binary):
        _check_expr(node.left, scopes)
        _check_expr(node.right, scopes)
        return
    _err(node, f"unknown expression {type(node).__name__}")


def parse_program(source: str, check: bool = True) -> Program:
    prog = _Parser(tokenize(source)).program()
    if check:
        check_program(prog)
    return prog


def is_skill(name: str) -> bool:
    return name in SKILLS
