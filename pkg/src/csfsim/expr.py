"""Arithmetic expressions in one variable ``z`` for initial data.

Grammar (whitespace ignored)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' unary)?
    atom    := NUMBER | 'z' | 'pi' | 'e' | FUNC '(' expr ')' | '(' expr ')'
    FUNC    := sin | cos | exp | sqrt

``^`` binds tighter than unary minus (``-z^2`` is ``-(z^2)``) and is right
associative. Errors report the byte offset into the source.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ExprSyntaxError

FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "sqrt": np.sqrt}
CONSTANTS = {"pi": math.pi, "e": math.e}


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str = "z"


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Var, Const, Neg, BinOp, Call]

_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|([A-Za-z_][A-Za-z0-9_]*)|(.))")


def _tokenize(src: str):
    tokens = []
    pos = 0
    raw = src.encode()
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m.end() == pos or not m.group(0).strip():
            break
        kind = "num" if m.group(1) else "name" if m.group(2) else "op"
        start = m.start(m.lastindex)
        tokens.append((kind, m.group(m.lastindex), len(src[:start].encode())))
        pos = m.end()
    tokens.append(("end", "", len(raw)))
    return tokens


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.tokens = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, expected):
        raise ExprSyntaxError(self.src, self.peek()[2], expected)

    def expect(self, text):
        if self.peek()[1] != text or self.peek()[0] != "op":
            self.fail(f"'{text}'")
        self.advance()

    def parse(self) -> Expr:
        node = self.expr()
        if self.peek()[0] != "end":
            self.fail("operator or end of input")
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.advance()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, text, _ = self.peek()
        if kind == "num":
            self.advance()
            return Num(float(text))
        if kind == "name":
            if text == "z":
                self.advance()
                return Var()
            if text in CONSTANTS:
                self.advance()
                return Const(text)
            if text in FUNCTIONS:
                self.advance()
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            self.fail("number, z, pi, e or one of sin, cos, exp, sqrt")
        if kind == "op" and text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        self.fail("number, z, constant, function or '('")


def parse_expr(src: str) -> Expr:
    return _Parser(src).parse()


def evaluate(node: Expr, z):
    """Evaluate on a scalar or an array of z values."""
    z = np.asarray(z, dtype=float)
    return np.broadcast_to(_eval(node, z), z.shape).astype(float)


def _eval(node, z):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return z
    if isinstance(node, Const):
        return CONSTANTS[node.name]
    if isinstance(node, Neg):
        return -_eval(node.operand, z)
    if isinstance(node, Call):
        return FUNCTIONS[node.func](_eval(node.arg, z))
    a, b = _eval(node.left, z), _eval(node.right, z)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if node.op == "/":
        if np.any(np.asarray(b) == 0):
            raise ZeroDivisionError("division by zero in expression")
        return a / b
    return np.power(a, b)


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def to_source(node: Expr) -> str:
    """Print with the parentheses needed to parse back to the same tree."""
    return _show(node)


def _prec(node) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return _PREC["neg"]
    return 5


def _show(node) -> str:
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return "z"
    if isinstance(node, Const):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({_show(node.arg)})"
    if isinstance(node, Neg):
        inner = _show(node.operand)
        return f"-{inner}" if _prec(node.operand) >= _PREC["neg"] else f"-({inner})"
    p = _PREC[node.op]
    if node.op == "^":
        # base must be atomic; the exponent is parsed as a unary
        left_ok = _prec(node.left) > p
        right_ok = _prec(node.right) >= _PREC["neg"]
    else:
        left_ok = _prec(node.left) >= p
        right_ok = _prec(node.right) > p
    left = _show(node.left) if left_ok else f"({_show(node.left)})"
    right = _show(node.right) if right_ok else f"({_show(node.right)})"
    return f"{left}{node.op}{right}"
