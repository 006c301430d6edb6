"""A deliberately tiny expression language for growth fields.

Grammar (whitespace ignored)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := ("+" | "-") unary | power
    power  := atom (("^" | "**") unary)?
    atom   := NUMBER | NAME | FUNC "(" expr ")" | "(" expr ")"

``FUNC`` is one of ``exp ln log sin cos sqrt``; ``NAME`` is a variable
(``R X1 X2 X3 t``) or a constant (``pi e``). ``^`` is right associative and
binds tighter than unary minus, so ``-R^2`` means ``-(R^2)``.

Expressions are parsed into a small AST that can be evaluated on numpy arrays
and differentiated symbolically.
"""
from __future__ import annotations

import math
import re

import numpy as np

from .errors import ParseError

FUNCTIONS = ("exp", "ln", "log", "sin", "cos", "sqrt")
VARIABLES = ("R", "X1", "X2", "X3", "t")
CONSTANTS = {"pi": math.pi, "e": math.e}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^()]))"
)


class Node:
    """Base AST node."""

    def eval(self, env):
        raise NotImplementedError

    def diff(self, var) -> "Node":
        raise NotImplementedError

    def variables(self) -> set:
        return set()

    def __call__(self, **env):
        return self.eval(env)


class Num(Node):
    def __init__(self, value):
        self.value = float(value)

    def eval(self, env):
        return self.value

    def diff(self, var):
        return Num(0.0)

    def __repr__(self):
        return repr(self.value)


class Var(Node):
    def __init__(self, name):
        self.name = name

    def eval(self, env):
        try:
            return env[self.name]
        except KeyError:
            raise KeyError(f"variable {self.name!r} not bound") from None

    def diff(self, var):
        return Num(1.0 if var == self.name else 0.0)

    def variables(self):
        return {self.name}

    def __repr__(self):
        return self.name


def _is(node, value):
    return isinstance(node, Num) and node.value == value


def add(a, b):
    if _is(a, 0.0):
        return b
    if _is(b, 0.0):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value + b.value)
    return Bin("+", a, b)


def sub(a, b):
    if _is(b, 0.0):
        return a
    if _is(a, 0.0):
        return neg(b)
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value - b.value)
    return Bin("-", a, b)


def mul(a, b):
    if _is(a, 0.0) or _is(b, 0.0):
        return Num(0.0)
    if _is(a, 1.0):
        return b
    if _is(b, 1.0):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value * b.value)
    return Bin("*", a, b)


def div(a, b):
    if _is(a, 0.0):
        return Num(0.0)
    if _is(b, 1.0):
        return a
    return Bin("/", a, b)


def power(a, b):
    if _is(b, 1.0):
        return a
    if _is(b, 0.0):
        return Num(1.0)
    return Bin("^", a, b)


def neg(a):
    if isinstance(a, Num):
        return Num(-a.value)
    return Neg(a)


class Neg(Node):
    def __init__(self, arg):
        self.arg = arg

    def eval(self, env):
        return -self.arg.eval(env)

    def diff(self, var):
        return neg(self.arg.diff(var))

    def variables(self):
        return self.arg.variables()

    def __repr__(self):
        return f"(-{self.arg!r})"


class Bin(Node):
    def __init__(self, op, a, b):
        self.op, self.a, self.b = op, a, b

    def eval(self, env):
        x = self.a.eval(env)
        y = self.b.eval(env)
        if self.op == "+":
            return x + y
        if self.op == "-":
            return x - y
        if self.op == "*":
            return x * y
        if self.op == "/":
            return x / y
        if isinstance(self.b, Num) and float(self.b.value).is_integer():
            return x ** int(self.b.value)
        return np.power(x, y)

    def diff(self, var):
        a, b = self.a, self.b
        da, db = a.diff(var), b.diff(var)
        if self.op == "+":
            return add(da, db)
        if self.op == "-":
            return sub(da, db)
        if self.op == "*":
            return add(mul(da, b), mul(a, db))
        if self.op == "/":
            return div(sub(mul(da, b), mul(a, db)), power(b, Num(2.0)))
        # power
        if isinstance(b, Num):
            return mul(mul(b, power(a, Num(b.value - 1.0))), da)
        # a^b = exp(b ln a)
        return mul(self, add(mul(db, Call("ln", a)), mul(b, div(da, a))))

    def variables(self):
        return self.a.variables() | self.b.variables()

    def __repr__(self):
        return f"({self.a!r} {self.op} {self.b!r})"


class Call(Node):
    def __init__(self, fn, arg):
        self.fn, self.arg = fn, arg

    def eval(self, env):
        x = self.arg.eval(env)
        if self.fn == "exp":
            return np.exp(x)
        if self.fn in ("ln", "log"):
            return np.log(x)
        if self.fn == "sin":
            return np.sin(x)
        if self.fn == "cos":
            return np.cos(x)
        return np.sqrt(x)

    def diff(self, var):
        u = self.arg
        du = u.diff(var)
        if _is(du, 0.0):
            return Num(0.0)
        if self.fn == "exp":
            outer = self
        elif self.fn in ("ln", "log"):
            return div(du, u)
        elif self.fn == "sin":
            outer = Call("cos", u)
        elif self.fn == "cos":
            outer = neg(Call("sin", u))
        else:
            return div(du, mul(Num(2.0), self))
        return mul(outer, du)

    def variables(self):
        return self.arg.variables()

    def __repr__(self):
        return f"{self.fn}({self.arg!r})"


class _Parser:
    def __init__(self, text, line=1):
        self.text = text
        self.line = line
        self.tokens = []
        pos = 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if m is None or m.end() == pos:
                if text[pos:].strip() == "":
                    break
                col = pos + 1 + (len(text[pos:]) - len(text[pos:].lstrip()))
                raise ParseError(f"unexpected character {text[col - 1]!r}", line, col, text)
            kind = m.lastgroup
            start = m.start(kind)
            self.tokens.append((kind, m.group(kind), start + 1))
            pos = m.end()
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else ("end", "", len(self.text) + 1)

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def fail(self, msg, col):
        raise ParseError(msg, self.line, col, self.text)

    def expect(self, value):
        kind, val, col = self.take()
        if val != value or kind == "end":
            what = "end of input" if kind == "end" else repr(val)
            self.fail(f"expected {value!r}, found {what}", col)

    def parse(self):
        if not self.tokens:
            self.fail("empty expression", 1)
        node = self.expr()
        kind, val, col = self.peek()
        if kind != "end":
            self.fail(f"unexpected token {val!r}", col)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            node = Bin(op, node, rhs)
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.unary()
            node = Bin(op, node, rhs)
        return node

    def unary(self):
        kind, val, _ = self.peek()
        if kind == "op" and val in ("+", "-"):
            self.take()
            arg = self.unary()
            return Neg(arg) if val == "-" else arg
        return self.power()

    def power(self):
        base = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val in ("^", "**"):
            self.take()
            return Bin("^", base, self.unary())
        return base

    def atom(self):
        kind, val, col = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            if val in CONSTANTS:
                return Num(CONSTANTS[val])
            if val in VARIABLES:
                return Var(val)
            self.fail(f"unknown name {val!r}", col)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "end":
            self.fail("unexpected end of input", col)
        self.fail(f"unexpected token {val!r}", col)


def parse(text: str, line: int = 1) -> Node:
    """Parse ``text`` into an AST; raises :class:`ParseError` with a 1-based column."""
    return _Parser(str(text), line).parse()
