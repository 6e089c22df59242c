"""Recursive-descent parser for the field expression language.

Grammar::

    expr   := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := base ("^" factor)?
    base   := number | var | func "(" expr ")" | "(" expr ")" | "-" base
    var    := "x" | "y" | "z" | "w" | "v"        (first d names only)
    func   := "sin" | "cos" | "exp" | "ln" | "sqrt"

Note that unary minus binds tighter than ``^``: ``-x^2`` parses as ``(-x)^2``.
The resulting tree evaluates either on plain numpy arrays (values only) or on
:class:`~levelgeom.taylor.Taylor2` jets (value, gradient, Hessian).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import ParseError
from .taylor import Taylor2

VARIABLES = ("x", "y", "z", "w", "v")
FUNCTIONS = ("sin", "cos", "exp", "ln", "sqrt")

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


@dataclass(frozen=True)
class Token:
    kind: str  # "num", "name", "op", "end"
    text: str
    offset: int


def tokenize(text):
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        tokens.append(Token(kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(Token("end", "", n))
    return tokens


# -- AST -------------------------------------------------------------------------


class Node:
    def evaluate(self, env):
        raise NotImplementedError

    def is_constant(self):
        return False

    def variables(self):
        return set()


@dataclass(frozen=True)
class Num(Node):
    value: float

    def evaluate(self, env):
        return self.value

    def is_constant(self):
        return True


@dataclass(frozen=True)
class Var(Node):
    name: str

    def evaluate(self, env):
        return env[self.name]

    def variables(self):
        return {self.name}


@dataclass(frozen=True)
class Neg(Node):
    operand: Node

    def evaluate(self, env):
        return -self.operand.evaluate(env)

    def is_constant(self):
        return self.operand.is_constant()

    def variables(self):
        return self.operand.variables()


@dataclass(frozen=True)
class BinOp(Node):
    op: str
    left: Node
    right: Node

    def evaluate(self, env):
        a = self.left.evaluate(env)
        if self.op == "^" and self.right.is_constant():
            c = float(self.right.evaluate(env))
            if isinstance(a, Taylor2):
                return a.powc(c)
            return np.power(a, c)
        b = self.right.evaluate(env)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if self.op == "/":
            return a / b
        # general power: a^b = exp(b ln a)
        if isinstance(a, Taylor2):
            return a**b
        if isinstance(b, Taylor2):
            return (b * np.log(a)).exp()
        return np.power(a, b)

    def is_constant(self):
        return self.left.is_constant() and self.right.is_constant()

    def variables(self):
        return self.left.variables() | self.right.variables()


_NUMPY_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "ln": np.log, "sqrt": np.sqrt}
_JET_FUNCS = {"sin": "sin", "cos": "cos", "exp": "exp", "ln": "log", "sqrt": "sqrt"}


@dataclass(frozen=True)
class Call(Node):
    func: str
    arg: Node

    def evaluate(self, env):
        a = self.arg.evaluate(env)
        if isinstance(a, Taylor2):
            return getattr(a, _JET_FUNCS[self.func])()
        return _NUMPY_FUNCS[self.func](a)

    def is_constant(self):
        return self.arg.is_constant()

    def variables(self):
        return self.arg.variables()


# -- parser ----------------------------------------------------------------------


class _Parser:
    def __init__(self, text, allowed):
        self.tokens = tokenize(text)
        self.i = 0
        self.allowed = allowed

    @property
    def tok(self):
        return self.tokens[self.i]

    def advance(self):
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect_op(self, op):
        t = self.tok
        if t.kind != "op" or t.text != op:
            found = t.text or "end of input"
            raise ParseError(f"expected {op!r}, found {found!r}", t.offset)
        self.advance()

    def parse(self):
        node = self.expr()
        if self.tok.kind != "end":
            raise ParseError(f"unexpected token {self.tok.text!r}", self.tok.offset)
        return node

    def expr(self):
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.advance().text
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        node = self.base()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            node = BinOp("^", node, self.factor())
        return node

    def base(self):
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Num(float(t.text))
        if t.kind == "name":
            self.advance()
            if t.text in FUNCTIONS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return Call(t.text, arg)
            if t.text in VARIABLES:
                if t.text not in self.allowed:
                    raise ParseError(
                        f"variable {t.text!r} not available in dimension {len(self.allowed)}",
                        t.offset,
                    )
                return Var(t.text)
            raise ParseError(f"unknown identifier {t.text!r}", t.offset)
        if t.kind == "op" and t.text == "(":
            self.advance()
            node = self.expr()
            self.expect_op(")")
            return node
        if t.kind == "op" and t.text == "-":
            self.advance()
            return Neg(self.base())
        found = t.text or "end of input"
        raise ParseError(f"unexpected token {found!r}", t.offset)


def parse_expression(text, d):
    """Parse ``text`` into an AST over the first ``d`` variable names."""
    return _Parser(text, VARIABLES[:d]).parse()
