"""Small expression language for Hamiltonians and custom chart functions.

Grammar (``^`` binds tighter than unary minus, which binds tighter than ``* /``)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := atom ("^" unary)?          # exponent must fold to an integer
    atom    := NUMBER | VAR | ("ln" | "exp") "(" expr ")" | "(" expr ")"

Numbers are kept as exact fractions; ``evaluate`` works in double precision.
Trees are built only through the simplifying constructors below, which makes
``parse(to_string(e)) == e`` hold for every tree this module produces.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence, Union

import numpy as np

__all__ = [
    "Expr",
    "Const",
    "Var",
    "Neg",
    "BinOp",
    "Pow",
    "Func",
    "ExprSyntaxError",
    "ExprEvaluationError",
    "ExprDomainError",
    "parse",
    "evaluate",
    "evaluate_array",
    "compile_scalar",
    "differentiate",
    "to_string",
    "variables",
    "const",
    "var",
    "neg",
    "add",
    "sub",
    "mul",
    "div",
    "power",
    "func",
]


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, source: str, offset: int):
        self.source = source
        self.offset = offset
        super().__init__(f"{message} at offset {offset}: {source!r}")


class ExprEvaluationError(ArithmeticError):
    pass


class ExprDomainError(ExprEvaluationError):
    pass


@dataclass(frozen=True)
class Const:
    value: Fraction


@dataclass(frozen=True)
class Var:
    index: int  # 1-based


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int


@dataclass(frozen=True)
class Func:
    name: str  # "ln" or "exp"
    arg: "Expr"


Expr = Union[Const, Var, Neg, BinOp, Pow, Func]

ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))


# -- simplifying constructors -------------------------------------------------

def const(value) -> Const:
    return Const(Fraction(value))


def var(index: int) -> Var:
    return Var(index)


def _is_const(e: Expr, value=None) -> bool:
    return isinstance(e, Const) and (value is None or e.value == value)


def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, BinOp) and a.op == "/" and isinstance(a.left, Const) and a.left.value != 0:
        return BinOp("/", Const(-a.left.value), a.right)
    return Neg(a)


def add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    if _is_const(b, 0):
        return a
    if _is_const(a, 0):
        return b
    return BinOp("+", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    if _is_const(b, 0):
        return a
    if _is_const(a, 0):
        return neg(b)
    return BinOp("-", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    if _is_const(a, 0) or _is_const(b, 0):
        return ZERO
    if _is_const(a, 1):
        return b
    if _is_const(b, 1):
        return a
    return BinOp("*", a, b)


def div(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const) and b.value != 0:
        return Const(a.value / b.value)
    if _is_const(b, 1):
        return a
    if _is_const(a, 0) and not _is_const(b, 0):
        return ZERO
    return BinOp("/", a, b)


def power(base: Expr, exponent: int) -> Expr:
    if exponent == 1:
        return base
    if exponent == 0:
        return ONE
    if isinstance(base, Const) and not (base.value == 0 and exponent < 0):
        return Const(base.value ** exponent)
    return Pow(base, exponent)


def func(name: str, arg: Expr) -> Expr:
    if name not in ("ln", "exp"):
        raise ValueError(f"unknown function {name!r}")
    if name == "exp" and _is_const(arg, 0):
        return ONE
    if name == "ln" and _is_const(arg, 1):
        return ZERO
    return Func(name, arg)


# -- parsing -------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()−])"
    r")"
)


def _tokenize(source: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(source):
        if source[pos:].strip() == "":
            break
        m = _TOKEN.match(source, pos)
        if not m or m.end() == pos:
            raise ExprSyntaxError("unexpected character", source, pos)
        kind = m.lastgroup
        text = m.group(kind)
        start = m.start(kind)
        if text == "−":
            text = "-"
        tokens.append((kind, text, start))
        pos = m.end()
    tokens.append(("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str, names: Mapping[str, int]):
        self.source = source
        self.tokens = _tokenize(source)
        self.pos = 0
        self.names = names

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.pos]

    def take(self) -> tuple[str, str, int]:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, message: str, tok=None):
        tok = tok or self.peek()
        return ExprSyntaxError(message, self.source, tok[2])

    def expect(self, text: str) -> None:
        tok = self.take()
        if tok[1] != text:
            raise self.error(f"expected {text!r}", tok)

    def parse(self) -> Expr:
        e = self.expr()
        if self.peek()[0] != "end":
            raise self.error(f"unexpected {self.peek()[1]!r}")
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            rhs = self.term()
            e = add(e, rhs) if op == "+" else sub(e, rhs)
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            rhs = self.unary()
            e = mul(e, rhs) if op == "*" else div(e, rhs)
        return e

    def unary(self) -> Expr:
        if self.peek()[1] == "-":
            self.take()
            return neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[1] == "^":
            tok = self.take()
            exponent = self.unary()
            if not isinstance(exponent, Const) or exponent.value.denominator != 1:
                raise self.error("exponent must be an integer constant", tok)
            return power(base, int(exponent.value))
        return base

    def atom(self) -> Expr:
        tok = self.take()
        kind, text, _ = tok
        if kind == "num":
            return Const(Fraction(text))
        if kind == "name":
            if text in ("ln", "exp"):
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return func(text, arg)
            if text in self.names:
                return Var(self.names[text])
            raise self.error(f"unknown identifier {text!r}", tok)
        if text == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "end":
            raise self.error("unexpected end of input", tok)
        raise self.error(f"unexpected {text!r}", tok)


_VAR_NAME = re.compile(r"x([1-9]\d*)$")


class _VarNames(dict):
    """Name table accepting x1..xn and rejecting out-of-range indices."""

    def __init__(self, n: int, extra: Mapping[str, int] | None):
        super().__init__(extra or {})
        self.n = n

    def __contains__(self, name) -> bool:
        return dict.__contains__(self, name) or bool(_VAR_NAME.match(name))

    def __getitem__(self, name: str) -> int:
        if dict.__contains__(self, name):
            return dict.__getitem__(self, name)
        index = int(_VAR_NAME.match(name).group(1))
        if index > self.n:
            raise IndexError(name)
        return index


def parse(source: str, n: int, names: Mapping[str, int] | None = None) -> Expr:
    """Parse ``source`` over variables ``x1..xn`` (plus optional extra ``names``)."""
    table = _VarNames(n, names)
    parser = _Parser(source, table)
    try:
        return parser.parse()
    except IndexError:
        tok = parser.tokens[parser.pos - 1]
        raise ExprSyntaxError(
            f"variable {tok[1]!r} out of range for dimension {n}", source, tok[2]
        ) from None


# -- printing ------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _prec(e: Expr) -> int:
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return 3
    if isinstance(e, Const) and e.value < 0 and e.value.denominator == 1:
        return 3
    if isinstance(e, Pow):
        return 4
    return 5


def to_string(e: Expr, names: Sequence[str] | None = None) -> str:
    """Render ``e`` as text that parses back to the same tree."""
    if isinstance(e, Const):
        v = e.value
        if v.denominator == 1:
            return str(v.numerator)
        return f"({v.numerator}/{v.denominator})"
    if isinstance(e, Var):
        return names[e.index - 1] if names else f"x{e.index}"
    if isinstance(e, Func):
        return f"{e.name}({to_string(e.arg, names)})"
    if isinstance(e, Neg):
        inner = to_string(e.arg, names)
        return f"-{inner}" if _prec(e.arg) >= 4 else f"-({inner})"
    if isinstance(e, Pow):
        base = to_string(e.base, names)
        if _prec(e.base) <= 4:
            base = f"({base})"
        exp = str(e.exponent) if e.exponent >= 0 else f"({e.exponent})"
        return f"{base}^{exp}"
    p = _PREC[e.op]
    left = to_string(e.left, names)
    right = to_string(e.right, names)
    if _prec(e.left) < p:
        left = f"({left})"
    if _prec(e.right) <= p:
        right = f"({right})"
    return f"{left} {e.op} {right}" if p == 1 else f"{left}{e.op}{right}"


def variables(e: Expr) -> set[int]:
    if isinstance(e, Var):
        return {e.index}
    if isinstance(e, Const):
        return set()
    if isinstance(e, (Neg, Func)):
        return variables(e.arg)
    if isinstance(e, Pow):
        return variables(e.base)
    return variables(e.left) | variables(e.right)


# -- evaluation ----------------------------------------------------------------

def evaluate(e: Expr, x: Sequence[float]) -> float:
    """Evaluate in double precision at the point ``x`` (``x[0]`` is ``x1``)."""
    if isinstance(e, Var):
        return float(x[e.index - 1])
    if isinstance(e, Const):
        return float(e.value)
    if isinstance(e, BinOp):
        a = evaluate(e.left, x)
        b = evaluate(e.right, x)
        op = e.op
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if b == 0.0:
            raise ExprEvaluationError(f"division by zero in {to_string(e)}")
        return a / b
    if isinstance(e, Neg):
        return -evaluate(e.arg, x)
    if isinstance(e, Pow):
        b = evaluate(e.base, x)
        if b == 0.0 and e.exponent < 0:
            raise ExprEvaluationError(f"division by zero in {to_string(e)}")
        try:
            return b ** e.exponent
        except OverflowError:
            return math.copysign(math.inf, b) if e.exponent % 2 else math.inf
    a = evaluate(e.arg, x)
    if e.name == "ln":
        if a <= 0.0:
            raise ExprDomainError(f"ln of nonpositive value {a!r}")
        return math.log(a)
    try:
        return math.exp(a)
    except OverflowError:
        return math.inf


def _c_div(a, b, text):
    if b == 0.0:
        raise ExprEvaluationError(f"division by zero in {text}")
    return a / b


def _c_pow(b, k, text):
    if b == 0.0 and k < 0:
        raise ExprEvaluationError(f"division by zero in {text}")
    try:
        return b ** k
    except OverflowError:
        return math.copysign(math.inf, b) if k % 2 else math.inf


def _c_ln(a):
    if a <= 0.0:
        raise ExprDomainError(f"ln of nonpositive value {a!r}")
    return math.log(a)


def _c_exp(a):
    try:
        return math.exp(a)
    except OverflowError:
        return math.inf


def _source(e: Expr, texts: list[str]) -> str:
    if isinstance(e, Var):
        return f"x[{e.index - 1}]"
    if isinstance(e, Const):
        return repr(float(e.value))
    if isinstance(e, Neg):
        return f"(-{_source(e.arg, texts)})"
    if isinstance(e, BinOp):
        a, b = _source(e.left, texts), _source(e.right, texts)
        if e.op == "/":
            texts.append(to_string(e))
            return f"_div({a}, {b}, _t[{len(texts) - 1}])"
        return f"({a} {e.op} {b})"
    if isinstance(e, Pow):
        texts.append(to_string(e))
        return f"_pow({_source(e.base, texts)}, {e.exponent}, _t[{len(texts) - 1}])"
    return f"_{e.name}({_source(e.arg, texts)})"


def compile_scalar(e: Expr):
    """``evaluate`` compiled to a plain Python function of the point ``x``.

    Same results and errors as ``evaluate``, without the per-node dispatch.
    The generated source only contains float literals, integer indices and
    fixed operator names.
    """
    texts: list[str] = []
    body = _source(e, texts)
    scope = {"_div": _c_div, "_pow": _c_pow, "_ln": _c_ln, "_exp": _c_exp, "_t": tuple(texts)}
    exec(f"def _f(x):\n    return {body}\n", scope)
    return scope["_f"]


def evaluate_array(e: Expr, X: np.ndarray) -> np.ndarray:
    """Vectorized ``evaluate`` over the rows of ``X`` (shape ``(m, n)``)."""
    X = np.asarray(X, dtype=float)
    if isinstance(e, Var):
        return X[:, e.index - 1].copy()
    if isinstance(e, Const):
        return np.full(X.shape[0], float(e.value))
    if isinstance(e, BinOp):
        a = evaluate_array(e.left, X)
        b = evaluate_array(e.right, X)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if np.any(b == 0.0):
            raise ExprEvaluationError(f"division by zero in {to_string(e)}")
        return a / b
    if isinstance(e, Neg):
        return -evaluate_array(e.arg, X)
    if isinstance(e, Pow):
        b = evaluate_array(e.base, X)
        if e.exponent < 0:
            if np.any(b == 0.0):
                raise ExprEvaluationError(f"division by zero in {to_string(e)}")
            return 1.0 / b ** (-e.exponent)
        return b ** e.exponent
    a = evaluate_array(e.arg, X)
    if e.name == "ln":
        if np.any(a <= 0.0):
            raise ExprDomainError("ln of nonpositive value")
        return np.log(a)
    with np.errstate(over="ignore"):
        return np.exp(a)


# -- differentiation -------------------------------------------------------------

def differentiate(e: Expr, i: int) -> Expr:
    """Symbolic partial derivative with respect to ``x_i`` (1-based)."""
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.index == i else ZERO
    if isinstance(e, Neg):
        return neg(differentiate(e.arg, i))
    if isinstance(e, BinOp):
        da = differentiate(e.left, i)
        db = differentiate(e.right, i)
        if e.op == "+":
            return add(da, db)
        if e.op == "-":
            return sub(da, db)
        if e.op == "*":
            return add(mul(da, e.right), mul(e.left, db))
        # (u/v)' = u'/v - u v'/v^2
        return sub(div(da, e.right), div(mul(e.left, db), power(e.right, 2)))
    if isinstance(e, Pow):
        db = differentiate(e.base, i)
        if _is_const(db, 0):
            return ZERO
        k = e.exponent
        return mul(mul(Const(Fraction(k)), power(e.base, k - 1)), db)
    da = differentiate(e.arg, i)
    if _is_const(da, 0):
        return ZERO
    if e.name == "ln":
        return div(da, e.arg)
    return mul(e, da)
