"""Minimal arithmetic expression language: parser, evaluator, exact derivative.

Initial profiles r0(x), k0(x) and constraint curves h(k), g(r) arrive as
strings in run configurations; this module turns them into immutable ASTs
that can be evaluated on floats or numpy arrays and differentiated exactly.

Grammar (standard precedence ``^`` > unary ``-`` > ``* /`` > ``+ -``)::

    expr   := term (('+'|'-') term)*
    term   := unary (('*'|'/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?        right-associative
    atom   := NUMBER | 'pi' | 'x' | FUNC '(' expr ')' | '(' expr ')'
    FUNC   := sin | cos | tan | atan | exp | ln | sqrt | cbrt

The single free variable is named ``x`` (constraint curves use it as the
formal argument, e.g. h(k) is written in terms of x and evaluated at k).
Exponents must be constant subexpressions; real exponents require a
positive base at evaluation time.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Expr", "Num", "Pi", "Var", "Neg", "Add", "Sub", "Mul", "Div", "Pow", "Call",
    "ExprError", "ExprSyntaxError", "ExprDomainError",
    "parse", "evaluate", "differentiate", "nth_derivative", "to_source",
    "FUNCTIONS",
]


class ExprError(Exception):
    """Base class for expression-language errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, message, offset):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class ExprDomainError(ExprError):
    """Evaluation left the real domain (ln/sqrt of a negative, zero divide...)."""


@dataclass(frozen=True)
class Expr:
    pass


@dataclass(frozen=True)
class Num(Expr):
    value: float


@dataclass(frozen=True)
class Pi(Expr):
    pass


@dataclass(frozen=True)
class Var(Expr):
    pass


@dataclass(frozen=True)
class Neg(Expr):
    a: Expr


@dataclass(frozen=True)
class Add(Expr):
    a: Expr
    b: Expr


@dataclass(frozen=True)
class Sub(Expr):
    a: Expr
    b: Expr


@dataclass(frozen=True)
class Mul(Expr):
    a: Expr
    b: Expr


@dataclass(frozen=True)
class Div(Expr):
    a: Expr
    b: Expr


@dataclass(frozen=True)
class Pow(Expr):
    a: Expr
    b: Expr  # constant subexpression


@dataclass(frozen=True)
class Call(Expr):
    fn: str
    a: Expr


FUNCTIONS = ("sin", "cos", "tan", "atan", "exp", "ln", "sqrt", "cbrt")

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(src):
    tokens = []
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            # skip over nothing: the first non-space char is illegal
            stripped = pos + (len(src[pos:]) - len(src[pos:].lstrip()))
            if stripped >= len(src):
                break
            raise ExprSyntaxError(f"illegal character {src[stripped]!r}", stripped)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src):
        self.src = src
        self.tokens = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op):
        kind, text, off = self.peek()
        if kind != "op" or text != op:
            raise ExprSyntaxError(f"expected {op!r}", off)
        self.next()

    def parse(self):
        e = self.expr()
        kind, text, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {text!r}", off)
        return e

    def expr(self):
        e = self.term()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "+-":
                self.next()
                rhs = self.term()
                e = Add(e, rhs) if text == "+" else Sub(e, rhs)
            else:
                return e

    def term(self):
        e = self.unary()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "*/":
                self.next()
                rhs = self.unary()
                e = Mul(e, rhs) if text == "*" else Div(e, rhs)
            else:
                return e

    def unary(self):
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.next()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        kind, text, off = self.peek()
        if kind == "op" and text == "^":
            self.next()
            expo = self.unary()
            if _reads_var(expo):
                raise ExprSyntaxError("exponent must be a constant expression", off)
            return Pow(base, expo)
        return base

    def atom(self):
        kind, text, off = self.next()
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            if text == "pi":
                return Pi()
            if text == "x":
                return Var()
            if text in FUNCTIONS:
                self.expect_op("(")
                arg = self.expr()
                k2, t2, o2 = self.peek()
                if k2 == "op" and t2 == ")":
                    self.next()
                    return Call(text, arg)
                raise ExprSyntaxError(
                    f"function {text!r} takes exactly one argument, expected ')'", o2)
            raise ExprSyntaxError(f"unknown identifier {text!r}", off)
        if kind == "op" and text == "(":
            e = self.expr()
            self.expect_op(")")
            return e
        raise ExprSyntaxError(f"expected expression, found {text or 'end of input'!r}", off)


def parse(src):
    """Parse a source string into an Expr tree."""
    return _Parser(src).parse()


def _reads_var(e):
    if isinstance(e, Var):
        return True
    if isinstance(e, (Num, Pi)):
        return False
    if isinstance(e, Neg):
        return _reads_var(e.a)
    if isinstance(e, Call):
        return _reads_var(e.a)
    return _reads_var(e.a) or _reads_var(e.b)


# evaluation

_CALL_IMPL = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "atan": np.arctan,
    "exp": np.exp,
    "ln": np.log,
    "sqrt": np.sqrt,
    "cbrt": np.cbrt,
}


def _is_integral(v):
    return bool(np.all(v == np.floor(v)))


def evaluate(e, x):
    """Evaluate the tree at x (float or ndarray). IEEE double semantics.

    Raises ExprDomainError instead of silently producing NaN for ln/sqrt of
    a negative, division by zero, and invalid powers.
    """
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Pi):
        return np.pi
    if isinstance(e, Var):
        return x
    if isinstance(e, Neg):
        return -evaluate(e.a, x)
    if isinstance(e, Add):
        return evaluate(e.a, x) + evaluate(e.b, x)
    if isinstance(e, Sub):
        return evaluate(e.a, x) - evaluate(e.b, x)
    if isinstance(e, Mul):
        return evaluate(e.a, x) * evaluate(e.b, x)
    if isinstance(e, Div):
        num = evaluate(e.a, x)
        den = evaluate(e.b, x)
        if np.any(np.asarray(den) == 0.0):
            raise ExprDomainError("division by zero")
        return num / den
    if isinstance(e, Pow):
        base = evaluate(e.a, x)
        expo = evaluate(e.b, 0.0)
        if np.any((np.asarray(base) == 0.0) & (expo < 0)):
            raise ExprDomainError("zero base with negative exponent")
        if not _is_integral(expo) and np.any(np.asarray(base) < 0.0):
            raise ExprDomainError("negative base with real exponent")
        return base ** expo
    if isinstance(e, Call):
        arg = evaluate(e.a, x)
        if e.fn == "ln" and np.any(np.asarray(arg) <= 0.0):
            raise ExprDomainError("ln of a non-positive value")
        if e.fn == "sqrt" and np.any(np.asarray(arg) < 0.0):
            raise ExprDomainError("sqrt of a negative value")
        return _CALL_IMPL[e.fn](arg)
    raise TypeError(f"not an Expr node: {e!r}")


# construction helpers with constant folding (no further simplification)

def _const(v):
    v = float(v)
    if v < 0:
        return Neg(Num(-v))
    return Num(v)


def _const_value(e):
    return evaluate(e, 0.0)


def _is_const(e, v=None):
    if isinstance(e, Num):
        return v is None or e.value == v
    if isinstance(e, Neg) and isinstance(e.a, Num):
        return v is None or -e.a.value == v
    return False


def _add(a, b):
    if _is_const(a) and _is_const(b):
        return _const(_const_value(a) + _const_value(b))
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    return Add(a, b)


def _sub(a, b):
    if _is_const(a) and _is_const(b):
        return _const(_const_value(a) - _const_value(b))
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return _neg(b)
    return Sub(a, b)


def _mul(a, b):
    if _is_const(a) and _is_const(b):
        return _const(_const_value(a) * _const_value(b))
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return Num(0.0)
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    return Mul(a, b)


def _div(a, b):
    if _is_const(a, 0.0):
        return Num(0.0)
    if _is_const(b, 1.0):
        return a
    if _is_const(a) and _is_const(b) and _const_value(b) != 0.0:
        return _const(_const_value(a) / _const_value(b))
    return Div(a, b)


def _pow(a, c):
    if c == 0.0:
        return Num(1.0)
    if c == 1.0:
        return a
    return Pow(a, _const(c))


def _neg(a):
    if isinstance(a, Num):
        return _const(-a.value)
    if isinstance(a, Neg):
        return a.a
    return Neg(a)


def differentiate(e):
    """Exact symbolic derivative with respect to the free variable."""
    if isinstance(e, (Num, Pi)):
        return Num(0.0)
    if isinstance(e, Var):
        return Num(1.0)
    if isinstance(e, Neg):
        return _neg(differentiate(e.a))
    if isinstance(e, Add):
        return _add(differentiate(e.a), differentiate(e.b))
    if isinstance(e, Sub):
        return _sub(differentiate(e.a), differentiate(e.b))
    if isinstance(e, Mul):
        return _add(_mul(differentiate(e.a), e.b), _mul(e.a, differentiate(e.b)))
    if isinstance(e, Div):
        da, db = differentiate(e.a), differentiate(e.b)
        return _div(_sub(_mul(da, e.b), _mul(e.a, db)), _pow(e.b, 2.0))
    if isinstance(e, Pow):
        c = _const_value(e.b)
        return _mul(_mul(_const(c), _pow(e.a, c - 1.0)), differentiate(e.a))
    if isinstance(e, Call):
        u, du = e.a, differentiate(e.a)
        if e.fn == "sin":
            return _mul(Call("cos", u), du)
        if e.fn == "cos":
            return _neg(_mul(Call("sin", u), du))
        if e.fn == "tan":
            return _div(du, _pow(Call("cos", u), 2.0))
        if e.fn == "atan":
            return _div(du, _add(Num(1.0), _pow(u, 2.0)))
        if e.fn == "exp":
            return _mul(Call("exp", u), du)
        if e.fn == "ln":
            return _div(du, u)
        if e.fn == "sqrt":
            return _div(du, _mul(Num(2.0), Call("sqrt", u)))
        if e.fn == "cbrt":
            return _div(du, _mul(Num(3.0), _pow(Call("cbrt", u), 2.0)))
    raise TypeError(f"not an Expr node: {e!r}")


def nth_derivative(e, n):
    for _ in range(n):
        e = differentiate(e)
    return e


# printing

_LEVEL_ADD, _LEVEL_MUL, _LEVEL_UNARY, _LEVEL_POW, _LEVEL_ATOM = 1, 2, 3, 4, 5


def _level(e):
    if isinstance(e, (Num, Pi, Var, Call)):
        return _LEVEL_ATOM
    if isinstance(e, (Add, Sub)):
        return _LEVEL_ADD
    if isinstance(e, (Mul, Div)):
        return _LEVEL_MUL
    if isinstance(e, Neg):
        return _LEVEL_UNARY
    return _LEVEL_POW


def _fmt_num(v):
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def _paren(e, min_level):
    s = to_source(e)
    if _level(e) < min_level:
        return f"({s})"
    return s


def to_source(e):
    """Print a tree so that parse(to_source(e)) is structurally identical."""
    if isinstance(e, Num):
        return _fmt_num(e.value)
    if isinstance(e, Pi):
        return "pi"
    if isinstance(e, Var):
        return "x"
    if isinstance(e, Neg):
        return "-" + _paren(e.a, _LEVEL_UNARY)
    if isinstance(e, Add):
        return f"{_paren(e.a, _LEVEL_ADD)} + {_paren(e.b, _LEVEL_ADD + 1)}"
    if isinstance(e, Sub):
        return f"{_paren(e.a, _LEVEL_ADD)} - {_paren(e.b, _LEVEL_ADD + 1)}"
    if isinstance(e, Mul):
        return f"{_paren(e.a, _LEVEL_MUL)}*{_paren(e.b, _LEVEL_MUL + 1)}"
    if isinstance(e, Div):
        return f"{_paren(e.a, _LEVEL_MUL)}/{_paren(e.b, _LEVEL_MUL + 1)}"
    if isinstance(e, Pow):
        return f"{_paren(e.a, _LEVEL_ATOM)}^{_paren(e.b, _LEVEL_UNARY)}"
    if isinstance(e, Call):
        return f"{e.fn}({to_source(e.a)})"
    raise TypeError(f"not an Expr node: {e!r}")
