"""A tiny arithmetic expression language evaluated over numpy arrays.

Grammar::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := "-" unary | "+" unary | atom
    atom   := NUMBER | NAME | NAME "(" expr ")" | "(" expr ")"

Names are the variables the caller allows (some of ``t``, ``s``, ``u``) and
the constant ``pi``; functions are ``sin``, ``cos``, ``atan`` and ``exp``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

__all__ = [
    "ExprSyntaxError",
    "ExprEvalError",
    "Expr",
    "parse_expr",
    "parse_constant",
    "vanishing_divisors",
]

FUNCTIONS = {"sin": np.sin, "cos": np.cos, "atan": np.arctan, "exp": np.exp}
CONSTANTS = {"pi": np.pi}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/()]))"
)


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, text: str, column: int):
        super().__init__(f"{message} at column {column}: {text!r}")
        self.column = column


class ExprEvalError(ArithmeticError):
    pass


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


Node = Union[Num, Var, Call, Neg, BinOp]


def _tokenize(text: str):
    pos = 0
    tokens = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        match = _TOKEN.match(text, pos)
        if match is None or match.end() == pos:
            raise ExprSyntaxError("unexpected character", text, pos + 1 + _skip_ws(text, pos))
        kind = match.lastgroup
        tokens.append((kind, match.group(kind), match.start(kind) + 1))
        pos = match.end()
    tokens.append(("end", "", len(text) + 1))
    return tokens


def _skip_ws(text: str, pos: int) -> int:
    return len(text[pos:]) - len(text[pos:].lstrip())


class _Parser:
    def __init__(self, text: str, variables: frozenset):
        self.text = text
        self.variables = variables
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, message, tok):
        raise ExprSyntaxError(message, self.text, tok[2])

    def parse(self) -> Node:
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            self.fail(f"unexpected {tok[1]!r}", tok)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        tok = self.peek()
        if tok[0] == "op" and tok[1] in ("-", "+"):
            self.take()
            arg = self.unary()
            return Neg(arg) if tok[1] == "-" else arg
        return self.atom()

    def atom(self) -> Node:
        tok = self.take()
        kind, value, _ = tok
        if kind == "num":
            return Num(float(value))
        if kind == "name":
            if value in FUNCTIONS:
                if self.peek()[1] != "(":
                    self.fail(f"function {value} needs an argument", self.peek())
                self.take()
                arg = self.expr()
                self.expect_close()
                return Call(value, arg)
            if value in CONSTANTS:
                return Num(CONSTANTS[value])
            if value in self.variables:
                return Var(value)
            self.fail(f"unknown name {value!r}", tok)
        if kind == "op" and value == "(":
            node = self.expr()
            self.expect_close()
            return node
        self.fail("expected a number, name or '('" if kind != "end" else "unexpected end", tok)

    def expect_close(self):
        tok = self.take()
        if tok[1] != ")":
            self.fail("expected ')'", tok)


def _eval(node: Node, env: dict):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Neg):
        return -_eval(node.arg, env)
    if isinstance(node, Call):
        return FUNCTIONS[node.func](_eval(node.arg, env))
    left = _eval(node.left, env)
    right = _eval(node.right, env)
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    if node.op == "*":
        return left * right
    if np.any(np.asarray(right) == 0):
        raise ExprEvalError("division by an expression that vanishes on the grid")
    return left / right


def _free(node: Node) -> set:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, (Neg, Call)):
        return _free(node.arg)
    if isinstance(node, BinOp):
        return _free(node.left) | _free(node.right)
    return set()


class Expr:
    """A parsed expression; call it with keyword arrays for its variables."""

    def __init__(self, text: str, variables: Iterable[str] = ("t", "s", "u")):
        self.text = text
        self.allowed = frozenset(variables)
        self.tree = _Parser(text, self.allowed).parse()
        self.free = frozenset(_free(self.tree))

    def __call__(self, **env):
        missing = self.free - env.keys()
        if missing:
            raise ExprEvalError(f"missing values for {sorted(missing)} in {self.text!r}")
        with np.errstate(all="ignore"):
            out = _eval(self.tree, env)
        if not np.all(np.isfinite(out)):
            raise ExprEvalError(f"non-finite value while evaluating {self.text!r}")
        return out

    def __repr__(self):
        return f"Expr({self.text!r})"

    def __eq__(self, other):
        return isinstance(other, Expr) and other.text == self.text and other.allowed == self.allowed

    def __hash__(self):
        return hash((self.text, self.allowed))


def parse_expr(text: str, variables: Iterable[str] = ("t", "s", "u")) -> Expr:
    return Expr(text, variables)


def parse_constant(value) -> float:
    """Accept a number or a variable-free expression such as ``"1/3"``."""
    if isinstance(value, bool):
        raise ExprSyntaxError("booleans are not numbers", str(value), 1)
    if isinstance(value, (int, float)):
        return float(value)
    return float(Expr(str(value), ())())


def _render(node: Node) -> str:
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"-{_render(node.arg)}"
    if isinstance(node, Call):
        return f"{node.func}({_render(node.arg)})"
    return f"({_render(node.left)} {node.op} {_render(node.right)})"


def vanishing_divisors(e: Expr, **env) -> list[str]:
    """Divisors of ``e`` that are zero somewhere on the sample ``env``.

    Divisors using variables absent from ``env`` are skipped.
    """
    out = []

    def walk(node):
        if isinstance(node, (Neg, Call)):
            walk(node.arg)
        elif isinstance(node, BinOp):
            walk(node.left)
            walk(node.right)
            if node.op == "/" and _free(node.right) <= env.keys():
                try:
                    with np.errstate(all="ignore"):
                        vals = _eval(node.right, env)
                except ExprEvalError:
                    return
                if np.any(np.asarray(vals) == 0):
                    out.append(_render(node.right))

    walk(e.tree)
    return out
