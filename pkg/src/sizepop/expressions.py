"""Tiny arithmetic expression language for user-specified vital rates.

Expressions range over the variables ``s`` (size) and ``P`` (total
population), the operators ``+ - * / ^``, parentheses, numeric literals,
and the single function ``exp``.  The language is deliberately small so
the parser stays auditable; evaluation is elementwise over numpy arrays.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import numpy as np


class ExpressionError(ValueError):
    """Parse failure; `offset` is the byte position in the source text."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte {offset})")
        self.offset = offset


@dataclass(frozen=True)
class Number:
    value: float


@dataclass(frozen=True)
class Variable:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


Node = Union[Number, Variable, Neg, Call, BinOp]

VARIABLES = ("s", "P")
FUNCTIONS = ("exp",)

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            at = len(text) - len(stripped)
            raise ExpressionError(f"unexpected character {text[at]!r}", at)
        if m.lastgroup == "num":
            tokens.append(("num", m.group("num"), m.start("num")))
        elif m.lastgroup == "ident":
            tokens.append(("ident", m.group("ident"), m.start("ident")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    """Recursive descent over the grammar

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := ('+'|'-') factor | power
    power  := atom ('^' factor)?          # right associative
    atom   := NUMBER | VARIABLE | FUNC '(' expr ')' | '(' expr ')'
    """

    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, text, pos = self.peek()
        if kind != "op" or text != op:
            raise ExpressionError(f"expected {op!r}", pos)
        return self.take()

    def parse(self) -> Node:
        node = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ExpressionError(f"unexpected trailing input {text!r}", pos)
        return node

    def expr(self) -> Node:
        node = self.term()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "+-":
                self.take()
                node = BinOp(text, node, self.term())
            else:
                return node

    def term(self) -> Node:
        node = self.factor()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "*/":
                self.take()
                node = BinOp(text, node, self.factor())
            else:
                return node

    def factor(self) -> Node:
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.take()
            return Neg(self.factor())
        if kind == "op" and text == "+":
            self.take()
            return self.factor()
        return self.power()

    def power(self) -> Node:
        node = self.atom()
        kind, text, _ = self.peek()
        if kind == "op" and text == "^":
            self.take()
            return BinOp("^", node, self.factor())
        return node

    def atom(self) -> Node:
        kind, text, pos = self.take()
        if kind == "num":
            return Number(float(text))
        if kind == "ident":
            nkind, ntext, _ = self.peek()
            if nkind == "op" and ntext == "(":
                if text not in FUNCTIONS:
                    raise ExpressionError(f"unknown function {text!r}", pos)
                self.take()
                arg = self.expr()
                self.expect_op(")")
                return Call(text, arg)
            if text not in VARIABLES:
                raise ExpressionError(f"unknown identifier {text!r}", pos)
            return Variable(text)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        raise ExpressionError(f"expected a value, found {text!r}" if text
                              else "unexpected end of expression", pos)


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def to_text(node: Node) -> str:
    """Render an AST; parsing the result reproduces the identical tree."""

    def wrap(child: Node, minimum: int) -> str:
        text, prec = render(child)
        return f"({text})" if prec < minimum else text

    def render(n: Node) -> tuple[str, int]:
        if isinstance(n, Number):
            return repr(n.value), 9
        if isinstance(n, Variable):
            return n.name, 9
        if isinstance(n, Call):
            inner, _ = render(n.arg)
            return f"{n.func}({inner})", 9
        if isinstance(n, Neg):
            return f"-{wrap(n.operand, _PREC['neg'])}", _PREC["neg"]
        p = _PREC[n.op]
        if n.op == "^":
            return f"{wrap(n.left, p + 1)}^{wrap(n.right, p)}", p
        return f"{wrap(n.left, p)}{n.op}{wrap(n.right, p + 1)}", p

    return render(node)[0]


def evaluate(node: Node, s, P):
    """Evaluate elementwise at (s, P); non-finite results are the caller's
    concern (rates are validated by sampling)."""
    with np.errstate(all="ignore"):
        return _eval(node, s, P)


def _eval(node: Node, s, P):
    if isinstance(node, Number):
        return node.value
    if isinstance(node, Variable):
        return s if node.name == "s" else P
    if isinstance(node, Neg):
        return -_eval(node.operand, s, P)
    if isinstance(node, Call):
        return np.exp(_eval(node.arg, s, P))
    left = _eval(node.left, s, P)
    right = _eval(node.right, s, P)
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    if node.op == "*":
        return left * right
    if node.op == "/":
        return np.divide(left, right)
    return np.power(left, right)


@dataclass(frozen=True)
class VitalRateExpression:
    """A parsed rate usable as a function of (s, P)."""

    ast: Node
    text: str

    def __call__(self, s, P):
        return evaluate(self.ast, s, P)

    def to_text(self) -> str:
        return to_text(self.ast)

    def uses_variable(self, name: str) -> bool:
        def walk(n: Node) -> bool:
            if isinstance(n, Variable):
                return n.name == name
            if isinstance(n, Neg):
                return walk(n.operand)
            if isinstance(n, Call):
                return walk(n.arg)
            if isinstance(n, BinOp):
                return walk(n.left) or walk(n.right)
            return False
        return walk(self.ast)


def parse_rate(text: str) -> VitalRateExpression:
    """Parse an expression over s and P into an evaluable AST."""
    return VitalRateExpression(_Parser(text).parse(), text)
