"""Forward-mode derivative scalars and the generic math they plug into.

Two scalar kinds:

* ``Dual`` carries (value, one directional sensitivity).  Used for first
  derivatives; lifts wrap every coordinate of a point so nested Dual layers
  stay unambiguous.
* ``HyperDual`` carries (value, two first-order sensitivities, one mixed
  second sensitivity).  Used for second derivatives; it is only ever applied
  directly to raw scalar fields, so when a HyperDual meets a Dual the Dual
  is always an older layer and is treated as a constant.

All arithmetic is generic over the component kind, which is what makes
nesting (derivatives of quantities that are themselves assembled from
derivatives) work without any symbolic machinery.
"""

from __future__ import annotations

import math

from .errors import EvalDomainError

_NUM = (int, float)


def scalar_value(s) -> float:
    """Innermost plain value of a possibly nested derivative scalar."""
    while True:
        t = type(s)
        if t is Dual or t is HyperDual:
            s = s.re
        else:
            return float(s)


def _is_zero(s) -> bool:
    t = type(s)
    if t is Dual:
        return _is_zero(s.re) and _is_zero(s.du)
    if t is HyperDual:
        return _is_zero(s.re) and _is_zero(s.e1) and _is_zero(s.e2) and _is_zero(s.e12)
    return s == 0.0


def is_seedless(s) -> bool:
    """True when s carries no derivative information at any layer."""
    t = type(s)
    if t is Dual:
        return _is_zero(s.du) and is_seedless(s.re)
    if t is HyperDual:
        return (
            _is_zero(s.e1)
            and _is_zero(s.e2)
            and _is_zero(s.e12)
            and is_seedless(s.re)
        )
    return True


class Dual:
    """a + b*eps with eps^2 = 0."""

    __slots__ = ("re", "du")

    def __init__(self, re, du=0.0):
        self.re = re
        self.du = du

    def __repr__(self):
        return f"Dual({self.re!r}, {self.du!r})"

    def __add__(self, o):
        if type(o) is Dual:
            return Dual(self.re + o.re, self.du + o.du)
        if isinstance(o, _NUM):
            return Dual(self.re + o, self.du)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, o):
        if type(o) is Dual:
            return Dual(self.re - o.re, self.du - o.du)
        if isinstance(o, _NUM):
            return Dual(self.re - o, self.du)
        return NotImplemented

    def __rsub__(self, o):
        if isinstance(o, _NUM):
            return Dual(o - self.re, -self.du)
        return NotImplemented

    def __mul__(self, o):
        if type(o) is Dual:
            return Dual(self.re * o.re, self.re * o.du + self.du * o.re)
        if isinstance(o, _NUM):
            return Dual(self.re * o, self.du * o)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, o):
        if type(o) is Dual:
            if scalar_value(o.re) == 0.0:
                raise ZeroDivisionError("dual division by zero")
            inv = 1.0 / o.re if isinstance(o.re, _NUM) else _reciprocal(o.re)
            return Dual(self.re * inv, (self.du * o.re - self.re * o.du) * inv * inv)
        if isinstance(o, _NUM):
            if o == 0.0:
                raise ZeroDivisionError("dual division by zero")
            return Dual(self.re / o, self.du / o)
        return NotImplemented

    def __rtruediv__(self, o):
        if isinstance(o, _NUM):
            if scalar_value(self.re) == 0.0:
                raise ZeroDivisionError("dual division by zero")
            inv = 1.0 / self.re if isinstance(self.re, _NUM) else _reciprocal(self.re)
            return Dual(o * inv, -o * self.du * inv * inv)
        return NotImplemented

    def __neg__(self):
        return Dual(-self.re, -self.du)

    def __pow__(self, o):
        return g_pow(self, o)

    def __rpow__(self, o):
        return g_pow(o, self)


class HyperDual:
    """v + a*e1 + b*e2 + c*e1*e2 with e1^2 = e2^2 = 0."""

    __slots__ = ("re", "e1", "e2", "e12")

    def __init__(self, re, e1=0.0, e2=0.0, e12=0.0):
        self.re = re
        self.e1 = e1
        self.e2 = e2
        self.e12 = e12

    def __repr__(self):
        return f"HyperDual({self.re!r}, {self.e1!r}, {self.e2!r}, {self.e12!r})"

    def __add__(self, o):
        if type(o) is HyperDual:
            return HyperDual(self.re + o.re, self.e1 + o.e1, self.e2 + o.e2, self.e12 + o.e12)
        if isinstance(o, _NUM) or type(o) is Dual:
            return HyperDual(self.re + o, self.e1, self.e2, self.e12)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, o):
        if type(o) is HyperDual:
            return HyperDual(self.re - o.re, self.e1 - o.e1, self.e2 - o.e2, self.e12 - o.e12)
        if isinstance(o, _NUM) or type(o) is Dual:
            return HyperDual(self.re - o, self.e1, self.e2, self.e12)
        return NotImplemented

    def __rsub__(self, o):
        if isinstance(o, _NUM) or type(o) is Dual:
            return HyperDual(o - self.re, -self.e1, -self.e2, -self.e12)
        return NotImplemented

    def __mul__(self, o):
        if type(o) is HyperDual:
            return HyperDual(
                self.re * o.re,
                self.re * o.e1 + self.e1 * o.re,
                self.re * o.e2 + self.e2 * o.re,
                self.re * o.e12 + self.e1 * o.e2 + self.e2 * o.e1 + self.e12 * o.re,
            )
        if isinstance(o, _NUM) or type(o) is Dual:
            return HyperDual(self.re * o, self.e1 * o, self.e2 * o, self.e12 * o)
        return NotImplemented

    __rmul__ = __mul__

    def _reciprocal(self):
        v = self.re
        if scalar_value(v) == 0.0:
            raise ZeroDivisionError("hyperdual division by zero")
        inv = 1.0 / v if isinstance(v, _NUM) else _reciprocal(v)
        inv2 = inv * inv
        return HyperDual(
            inv,
            -self.e1 * inv2,
            -self.e2 * inv2,
            -self.e12 * inv2 + 2.0 * self.e1 * self.e2 * inv2 * inv,
        )

    def __truediv__(self, o):
        if type(o) is HyperDual:
            return self * o._reciprocal()
        if isinstance(o, _NUM) or type(o) is Dual:
            if scalar_value(o) == 0.0:
                raise ZeroDivisionError("hyperdual division by zero")
            inv = 1.0 / o if isinstance(o, _NUM) else _reciprocal(o)
            return HyperDual(self.re * inv, self.e1 * inv, self.e2 * inv, self.e12 * inv)
        return NotImplemented

    def __rtruediv__(self, o):
        if isinstance(o, _NUM) or type(o) is Dual:
            return self._reciprocal() * o
        return NotImplemented

    def __neg__(self):
        return HyperDual(-self.re, -self.e1, -self.e2, -self.e12)

    def __pow__(self, o):
        return g_pow(self, o)

    def __rpow__(self, o):
        return g_pow(o, self)


def _reciprocal(s):
    """1/s for a nested derivative scalar."""
    return 1.0 / s if isinstance(s, _NUM) else s.__rtruediv__(1.0)


def _chain1(x, f, df):
    """Apply f with derivative df through a Dual."""
    return Dual(f(x.re), df(x.re) * x.du)


def _chain2(x, f, df, d2f):
    """Apply f with first/second derivatives through a HyperDual."""
    d = df(x.re)
    return HyperDual(
        f(x.re),
        d * x.e1,
        d * x.e2,
        d * x.e12 + d2f(x.re) * x.e1 * x.e2,
    )


def _domain(cond, message):
    if not cond:
        raise EvalDomainError(message)


def g_sin(x):
    t = type(x)
    if t is Dual:
        return _chain1(x, g_sin, g_cos)
    if t is HyperDual:
        return _chain2(x, g_sin, g_cos, lambda v: -g_sin(v))
    return math.sin(x)


def g_cos(x):
    t = type(x)
    if t is Dual:
        return _chain1(x, g_cos, lambda v: -g_sin(v))
    if t is HyperDual:
        return _chain2(x, g_cos, lambda v: -g_sin(v), lambda v: -g_cos(v))
    return math.cos(x)


def g_tan(x):
    t = type(x)
    if t is Dual:
        return _chain1(x, g_tan, lambda v: 1.0 + g_tan(v) * g_tan(v))
    if t is HyperDual:
        def dtan(v):
            tv = g_tan(v)
            return 1.0 + tv * tv

        def d2tan(v):
            tv = g_tan(v)
            return 2.0 * tv * (1.0 + tv * tv)

        return _chain2(x, g_tan, dtan, d2tan)
    return math.tan(x)


def g_exp(x):
    t = type(x)
    if t is Dual:
        return _chain1(x, g_exp, g_exp)
    if t is HyperDual:
        return _chain2(x, g_exp, g_exp, g_exp)
    return math.exp(x)


def g_log(x):
    _domain(scalar_value(x) > 0.0, "log of a non-positive value")
    t = type(x)
    if t is Dual:
        return _chain1(x, g_log, _reciprocal)
    if t is HyperDual:
        return _chain2(x, g_log, _reciprocal, lambda v: -_reciprocal(v * v))
    return math.log(x)


def g_sqrt(x):
    t = type(x)
    if t is Dual or t is HyperDual:
        # Differentiating through sqrt needs a strictly interior point.
        _domain(scalar_value(x) > 0.0, "sqrt differentiated at a non-positive value")
        half = 0.5
        if t is Dual:
            return _chain1(x, g_sqrt, lambda v: half * _reciprocal(g_sqrt(v)))
        return _chain2(
            x,
            g_sqrt,
            lambda v: half * _reciprocal(g_sqrt(v)),
            lambda v: -0.25 * _reciprocal(g_sqrt(v) * v),
        )
    _domain(x >= 0.0, "sqrt of a negative value")
    return math.sqrt(x)


def g_sinh(x):
    t = type(x)
    if t is Dual:
        return _chain1(x, g_sinh, g_cosh)
    if t is HyperDual:
        return _chain2(x, g_sinh, g_cosh, g_sinh)
    return math.sinh(x)


def g_cosh(x):
    t = type(x)
    if t is Dual:
        return _chain1(x, g_cosh, g_sinh)
    if t is HyperDual:
        return _chain2(x, g_cosh, g_sinh, g_cosh)
    return math.cosh(x)


def g_abs(x):
    t = type(x)
    if t is Dual or t is HyperDual:
        v = scalar_value(x)
        _domain(v != 0.0, "abs differentiated at zero")
        return x if v > 0.0 else -x
    return abs(x)


def g_div(a, b):
    if scalar_value(b) == 0.0:
        raise EvalDomainError("division by zero")
    return a / b


def g_ipow(u, k: int):
    """u**k for integer k by square-and-multiply; supports negative bases."""
    if k == 0:
        return 1.0
    negative = k < 0
    k = -k if negative else k
    acc = None
    base = u
    while k:
        if k & 1:
            acc = base if acc is None else acc * base
        k >>= 1
        if k:
            base = base * base
    if negative:
        if scalar_value(acc) == 0.0:
            raise EvalDomainError("zero raised to a negative power")
        return _reciprocal(acc)
    return acc


def g_pow(u, w):
    """General power.  Integer seedless exponents work for any base; other
    exponents go through exp(w*log(u)) and need a positive base."""
    if is_seedless(w):
        wv = scalar_value(w)
        if wv.is_integer() and abs(wv) <= 1e6:
            return g_ipow(u, int(wv))
    if scalar_value(u) <= 0.0:
        raise EvalDomainError("non-integer power of a non-positive base")
    return g_exp(w * g_log(u))
