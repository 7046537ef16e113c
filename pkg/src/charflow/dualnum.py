"""Forward-mode derivative-carrying scalars, nestable for higher order.

A ``Dual`` holds a value together with its partial derivatives along a fixed
tuple of directions. Both the value and the partials may be floats, numpy
arrays (batched evaluation over many sample points at once) or further
``Dual`` instances; nesting the seeding yields exact second and third
derivatives to round-off, which the jet-space operators rely on.

Exact-zero float partials are propagated symbolically to keep nested
evaluation cheap.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Dual", "seed_one", "value_of",
    "sin", "cos", "tan", "atan", "exp", "log", "sqrt", "cbrt", "powc",
    "apply_chain", "ChainDepthError",
]


class ChainDepthError(TypeError):
    """A lifted function was nested deeper than its derivative chain allows."""


def _is_zero(v):
    return type(v) is float and v == 0.0


def _add(a, b):
    if _is_zero(a):
        return b
    if _is_zero(b):
        return a
    return a + b


def _mul(a, b):
    if _is_zero(a) or _is_zero(b):
        return 0.0
    return a * b


def _neg(a):
    if _is_zero(a):
        return 0.0
    return -a


class Dual:
    __slots__ = ("val", "parts")

    # keep numpy from broadcasting over us; binary ops fall back to our
    # reflected implementations instead
    __array_ufunc__ = None

    def __init__(self, val, parts):
        self.val = val
        self.parts = tuple(parts)

    def __repr__(self):
        return f"Dual({self.val!r}, {self.parts!r})"

    def __add__(self, o):
        if isinstance(o, Dual):
            return Dual(_add(self.val, o.val),
                        (_add(p, q) for p, q in zip(self.parts, o.parts)))
        return Dual(_add(self.val, o), self.parts)

    __radd__ = __add__

    def __sub__(self, o):
        if isinstance(o, Dual):
            return Dual(_add(self.val, _neg(o.val)),
                        (_add(p, _neg(q)) for p, q in zip(self.parts, o.parts)))
        return Dual(self.val - o, self.parts)

    def __rsub__(self, o):
        return Dual(o - self.val, (_neg(p) for p in self.parts))

    def __neg__(self):
        return Dual(_neg(self.val), (_neg(p) for p in self.parts))

    def __mul__(self, o):
        if isinstance(o, Dual):
            return Dual(_mul(self.val, o.val),
                        (_add(_mul(p, o.val), _mul(self.val, q))
                         for p, q in zip(self.parts, o.parts)))
        return Dual(_mul(self.val, o), (_mul(p, o) for p in self.parts))

    __rmul__ = __mul__

    def __truediv__(self, o):
        if isinstance(o, Dual):
            return self * _recip(o)
        return self * (1.0 / o)

    def __rtruediv__(self, o):
        return _recip(self) * o

    def __pow__(self, c):
        return powc(self, c)


def _recip(x):
    if isinstance(x, Dual):
        iv = _recip(x.val)
        m = _mul(iv, iv)
        return Dual(iv, (_neg(_mul(m, p)) for p in x.parts))
    return 1.0 / x


def powc(x, c):
    """x**c for a constant real exponent c."""
    if isinstance(x, Dual):
        if c == 0:
            return 1.0
        if c == 1:
            return x
        fv = powc(x.val, c)
        df = float(c) * powc(x.val, c - 1)
        return Dual(fv, (_mul(df, p) for p in x.parts))
    return x ** c


def sin(x):
    if isinstance(x, Dual):
        d = cos(x.val)
        return Dual(sin(x.val), (_mul(d, p) for p in x.parts))
    return np.sin(x)


def cos(x):
    if isinstance(x, Dual):
        d = _neg(sin(x.val))
        return Dual(cos(x.val), (_mul(d, p) for p in x.parts))
    return np.cos(x)


def tan(x):
    if isinstance(x, Dual):
        t = tan(x.val)
        d = _add(1.0, _mul(t, t))
        return Dual(t, (_mul(d, p) for p in x.parts))
    return np.tan(x)


def atan(x):
    if isinstance(x, Dual):
        d = _recip(_add(1.0, _mul(x.val, x.val)))
        return Dual(atan(x.val), (_mul(d, p) for p in x.parts))
    return np.arctan(x)


def exp(x):
    if isinstance(x, Dual):
        e = exp(x.val)
        return Dual(e, (_mul(e, p) for p in x.parts))
    return np.exp(x)


def log(x):
    if isinstance(x, Dual):
        d = _recip(x.val)
        return Dual(log(x.val), (_mul(d, p) for p in x.parts))
    return np.log(x)


def sqrt(x):
    if isinstance(x, Dual):
        s = sqrt(x.val)
        d = _mul(0.5, _recip(s))
        return Dual(s, (_mul(d, p) for p in x.parts))
    return np.sqrt(x)


def cbrt(x):
    if isinstance(x, Dual):
        c = cbrt(x.val)
        d = _recip(_mul(3.0, _mul(c, c)))
        return Dual(c, (_mul(d, p) for p in x.parts))
    return np.cbrt(x)


def apply_chain(x, chain):
    """Lift a univariate function given by its derivative sequence.

    chain[j] evaluates the j-th derivative on plain floats/arrays. The chain
    must be at least one longer than the Dual nesting depth of x.
    """
    if not isinstance(x, Dual):
        return chain[0](x)
    if len(chain) < 2:
        raise ChainDepthError("derivative chain exhausted; supply more derivatives")
    v = apply_chain(x.val, chain)
    d = apply_chain(x.val, chain[1:])
    return Dual(v, (_mul(d, p) for p in x.parts))


def seed_one(value, index, n):
    """A Dual for one coordinate of an n-direction gradient pass."""
    parts = [0.0] * n
    parts[index] = 1.0
    return Dual(value, parts)


def value_of(x):
    """Innermost plain value of a possibly nested Dual."""
    while isinstance(x, Dual):
        x = x.val
    return x
