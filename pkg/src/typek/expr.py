"""A small expression language with exact symbolic differentiation.

Grammar::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := base ('^' integer)?
    base   := real | ident | '(' expr ')' | '-' base | func '(' expr ')'
    func   := 'atan' | 'exp' | 'log' | 'sqrt' | 'tanh'

Unary minus binds tighter than ``^`` (``-x^2`` is ``(-x)^2``), exactly as
the grammar reads.  Exponents are integers only; write ``exp(p*log(x))``
for general powers.

Nodes evaluate on numpy arrays, so one call evaluates a whole grid.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import MapSyntaxError, UnknownIdentifierError

__all__ = [
    "Expr", "Num", "Name", "Neg", "Add", "Sub", "Mul", "Div", "Pow", "Call",
    "FUNCTIONS", "parse_expr", "tokenize", "diff", "simplify",
]

FUNCTIONS = ("atan", "exp", "log", "sqrt", "tanh")
_NUMPY_FUNCS = {"atan": np.arctan, "exp": np.exp, "log": np.log, "sqrt": np.sqrt, "tanh": np.tanh}


class Expr:
    """Base node.  Subclasses are frozen dataclasses."""

    def evaluate(self, env: Mapping[str, object]):
        raise NotImplementedError

    def names(self) -> set[str]:
        out: set[str] = set()
        _collect_names(self, out)
        return out

    def __str__(self):
        return _to_str(self)


@dataclass(frozen=True)
class Num(Expr):
    value: float

    def evaluate(self, env):
        return self.value


@dataclass(frozen=True)
class Name(Expr):
    """A variable ``x<i>`` or a parameter."""

    name: str

    def evaluate(self, env):
        return env[self.name]


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr

    def evaluate(self, env):
        return -self.arg.evaluate(env)


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr

    def evaluate(self, env):
        return self.left.evaluate(env) + self.right.evaluate(env)


@dataclass(frozen=True)
class Sub(Expr):
    left: Expr
    right: Expr

    def evaluate(self, env):
        return self.left.evaluate(env) - self.right.evaluate(env)


@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr

    def evaluate(self, env):
        return self.left.evaluate(env) * self.right.evaluate(env)


@dataclass(frozen=True)
class Div(Expr):
    left: Expr
    right: Expr

    def evaluate(self, env):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.divide(self.left.evaluate(env), self.right.evaluate(env))


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int

    def evaluate(self, env):
        b = self.base.evaluate(env)
        if self.exponent < 0:
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.divide(1.0, np.power(b, -self.exponent))
        return np.power(b, self.exponent)


@dataclass(frozen=True)
class Call(Expr):
    func: str
    arg: Expr

    def evaluate(self, env):
        with np.errstate(divide="ignore", invalid="ignore"):
            return _NUMPY_FUNCS[self.func](self.arg.evaluate(env))


def _collect_names(e: Expr, out: set) -> None:
    if isinstance(e, Name):
        out.add(e.name)
    for child in _children(e):
        _collect_names(child, out)


def _children(e: Expr):
    if isinstance(e, (Add, Sub, Mul, Div)):
        return (e.left, e.right)
    if isinstance(e, (Neg, Call)):
        return (e.arg,)
    if isinstance(e, Pow):
        return (e.base,)
    return ()


_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, Pow: 4}


def _to_str(e: Expr) -> str:
    if isinstance(e, Num):
        return repr(e.value) if e.value >= 0 else f"({e.value!r})"
    if isinstance(e, Name):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({_to_str(e.arg)})"
    if isinstance(e, Neg):
        return f"-({_to_str(e.arg)})"
    if isinstance(e, Pow):
        return f"({_to_str(e.base)})^{e.exponent}"
    op = {Add: "+", Sub: "-", Mul: "*", Div: "/"}[type(e)]
    return f"({_to_str(e.left)} {op} {_to_str(e.right)})"


# -- simplifying constructors -------------------------------------------------

ZERO, ONE = Num(0.0), Num(1.0)


def _is(e: Expr, v: float) -> bool:
    return isinstance(e, Num) and e.value == v


def add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value + b.value)
    if _is(a, 0.0):
        return b
    if _is(b, 0.0):
        return a
    if isinstance(b, Neg):
        return sub(a, b.arg)
    return Add(a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value - b.value)
    if _is(b, 0.0):
        return a
    if _is(a, 0.0):
        return neg(b)
    return Sub(a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value * b.value)
    if _is(a, 0.0) or _is(b, 0.0):
        return ZERO
    if _is(a, 1.0):
        return b
    if _is(b, 1.0):
        return a
    if _is(a, -1.0):
        return neg(b)
    if _is(b, -1.0):
        return neg(a)
    return Mul(a, b)


def div(a: Expr, b: Expr) -> Expr:
    if _is(a, 0.0):
        return ZERO
    if _is(b, 1.0):
        return a
    if isinstance(a, Num) and isinstance(b, Num) and b.value != 0.0:
        return Num(a.value / b.value)
    return Div(a, b)


def power(a: Expr, n: int) -> Expr:
    if n == 0:
        return ONE
    if n == 1:
        return a
    if isinstance(a, Num) and (a.value != 0.0 or n > 0):
        return Num(a.value ** n)
    return Pow(a, n)


def simplify(e: Expr) -> Expr:
    """Rebuild ``e`` bottom-up through the folding constructors."""
    if isinstance(e, (Num, Name)):
        return e
    if isinstance(e, Neg):
        return neg(simplify(e.arg))
    if isinstance(e, Pow):
        return power(simplify(e.base), e.exponent)
    if isinstance(e, Call):
        return Call(e.func, simplify(e.arg))
    build = {Add: add, Sub: sub, Mul: mul, Div: div}[type(e)]
    return build(simplify(e.left), simplify(e.right))


def diff(e: Expr, var: str) -> Expr:
    """Symbolic derivative of ``e`` with respect to the variable ``var``."""
    if isinstance(e, Num):
        return ZERO
    if isinstance(e, Name):
        return ONE if e.name == var else ZERO
    if isinstance(e, Neg):
        return neg(diff(e.arg, var))
    if isinstance(e, Add):
        return add(diff(e.left, var), diff(e.right, var))
    if isinstance(e, Sub):
        return sub(diff(e.left, var), diff(e.right, var))
    if isinstance(e, Mul):
        return add(mul(diff(e.left, var), e.right), mul(e.left, diff(e.right, var)))
    if isinstance(e, Div):
        du, dv = diff(e.left, var), diff(e.right, var)
        if _is(dv, 0.0):
            return div(du, e.right)
        return div(sub(mul(du, e.right), mul(e.left, dv)), power(e.right, 2))
    if isinstance(e, Pow):
        du = diff(e.base, var)
        return mul(mul(Num(float(e.exponent)), power(e.base, e.exponent - 1)), du)
    if isinstance(e, Call):
        du = diff(e.arg, var)
        if _is(du, 0.0):
            return ZERO
        u = e.arg
        if e.func == "atan":
            outer = div(ONE, add(ONE, power(u, 2)))
        elif e.func == "exp":
            outer = e
        elif e.func == "log":
            outer = div(ONE, u)
        elif e.func == "sqrt":
            outer = div(ONE, mul(Num(2.0), e))
        elif e.func == "tanh":
            outer = sub(ONE, power(e, 2))
        else:  # pragma: no cover - grammar is closed
            raise ValueError(e.func)
        return mul(outer, du)
    raise TypeError(f"unknown node {e!r}")  # pragma: no cover


# -- tokenizer and parser ----------------------------------------------------

_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r\n]+)"
    r"|(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),])"
)


@dataclass(frozen=True)
class Token:
    kind: str  # "num", "ident", "op", "end"
    text: str
    pos: int


def _line_col(source: str, pos: int) -> tuple[int, int]:
    line = source.count("\n", 0, pos) + 1
    col = pos - (source.rfind("\n", 0, pos) + 1) + 1
    return line, col


def tokenize(source: str, start: int = 0, end: int | None = None) -> list[Token]:
    """Tokens of ``source[start:end]``; positions are offsets into ``source``."""
    end = len(source) if end is None else end
    tokens = []
    pos = start
    while pos < end:
        m = _TOKEN_RE.match(source, pos, end)
        if m is None:
            line, col = _line_col(source, pos)
            raise MapSyntaxError(f"unexpected character {source[pos]!r}", line, col)
        if m.lastgroup != "ws":
            tokens.append(Token(m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(Token("end", "", end))
    return tokens


class _Parser:
    def __init__(self, source: str, tokens: list[Token], known: set[str] | None):
        self.source = source
        self.tokens = tokens
        self.i = 0
        self.known = known

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.peek()
        line, col = _line_col(self.source, tok.pos)
        return MapSyntaxError(message, line, col)

    def peek(self) -> Token:
        return self.tokens[self.i]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.next()
        if tok.text != text:
            found = "end of input" if tok.kind == "end" else repr(tok.text)
            raise self.error(f"expected {text!r}, found {found}", tok)
        return tok

    def parse(self) -> Expr:
        e = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise self.error(f"unexpected token {tok.text!r}", tok)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek().text in ("+", "-"):
            op = self.next().text
            rhs = self.term()
            e = Add(e, rhs) if op == "+" else Sub(e, rhs)
        return e

    def term(self) -> Expr:
        e = self.factor()
        while self.peek().text in ("*", "/"):
            op = self.next().text
            rhs = self.factor()
            e = Mul(e, rhs) if op == "*" else Div(e, rhs)
        return e

    def factor(self) -> Expr:
        e = self.base()
        if self.peek().text == "^":
            self.next()
            sign = 1
            if self.peek().text in ("+", "-"):
                sign = -1 if self.next().text == "-" else 1
            tok = self.next()
            if tok.kind != "num" or not tok.text.isdigit():
                raise self.error("exponent must be an integer literal", tok)
            e = Pow(e, sign * int(tok.text))
        return e

    def base(self) -> Expr:
        tok = self.next()
        if tok.kind == "num":
            return Num(float(tok.text))
        if tok.text == "-":
            return Neg(self.base())
        if tok.text == "(":
            e = self.expr()
            self.expect(")")
            return e
        if tok.kind == "ident":
            if tok.text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(tok.text, arg)
            if self.known is not None and tok.text not in self.known:
                line, col = _line_col(self.source, tok.pos)
                raise UnknownIdentifierError(tok.text, line, col)
            return Name(tok.text)
        if tok.kind == "end":
            raise self.error("unexpected end of expression", tok)
        raise self.error(f"unexpected token {tok.text!r}", tok)


def parse_expr(source: str, known: set[str] | None = None, start: int = 0,
               end: int | None = None) -> Expr:
    """Parse ``source[start:end]`` as an expression.

    ``known`` restricts the identifiers that may appear; anything else
    raises :class:`UnknownIdentifierError` with its position.
    """
    return _Parser(source, tokenize(source, start, end), known).parse()
