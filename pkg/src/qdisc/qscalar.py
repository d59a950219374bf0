"""Exact scalars, q-Pochhammer symbols and truncated power series in ``t``.

Every number in the package is an exact rational (``gmpy2.mpq``).  The
deformation weight only ever enters through ``t``, which is either a rational
in (0, 1) or the formal variable of a :class:`TSeries`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Union

from gmpy2 import mpq

from .errors import DivByZero, InvertNonUnit, OrderMismatch

ExactScalar = type(mpq())

__all__ = [
    "ExactScalar",
    "QContext",
    "TSeries",
    "box_eigenvalue",
    "exact",
    "fmt",
    "is_zero",
    "phi32_terminating",
    "qbinom_expand",
    "qint",
    "qpoch",
    "tseries_arith",
]


def exact(x) -> ExactScalar:
    """Coerce ``x`` to an exact rational.

    Accepts ints, ``Fraction``, ``mpq`` and strings such as ``"7/10"``.
    Floats are refused: they would silently lose exactness.
    """
    if isinstance(x, ExactScalar):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(x, (int, Fraction, Rational)):
        return mpq(int(x.numerator), int(x.denominator))
    if isinstance(x, str):
        return mpq(x.strip())
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


class TSeries:
    """Power series in ``t`` truncated modulo ``t**(order+1)``.

    Instances are immutable.  Arithmetic with plain rationals promotes them to
    constant series; arithmetic between series of different orders raises
    :class:`OrderMismatch`.
    """

    __slots__ = ("_c",)

    def __init__(self, coeffs: Iterable, order: int | None = None):
        c = [exact(x) for x in coeffs]
        if order is not None:
            if order < 0:
                raise ValueError("order must be >= 0")
            c = (c + [mpq(0)] * (order + 1 - len(c)))[: order + 1]
        if not c:
            raise ValueError("a series needs at least one coefficient")
        self._c = tuple(c)

    @classmethod
    def _raw(cls, coeffs: tuple) -> "TSeries":
        s = object.__new__(cls)
        s._c = coeffs
        return s

    @classmethod
    def variable(cls, order: int) -> "TSeries":
        if order < 1:
            # t itself vanishes modulo t**1; still a legal, if degenerate, series
            return cls([0], order)
        return cls([0, 1], order)

    @classmethod
    def constant(cls, value, order: int) -> "TSeries":
        return cls([value], order)

    @property
    def order(self) -> int:
        return len(self._c) - 1

    @property
    def coeffs(self) -> tuple:
        return self._c

    def __getitem__(self, n: int) -> ExactScalar:
        return self._c[n]

    def __len__(self) -> int:
        return len(self._c)

    def __iter__(self):
        return iter(self._c)

    def _coerce(self, other) -> "TSeries | None":
        if isinstance(other, TSeries):
            if other.order != self.order:
                raise OrderMismatch(
                    f"series orders differ: {self.order} vs {other.order}"
                )
            return other
        try:
            v = exact(other)
        except TypeError:
            return None
        return TSeries._raw((v,) + (mpq(0),) * self.order)

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return TSeries._raw(tuple(a + b for a, b in zip(self._c, o._c)))

    __radd__ = __add__

    def __neg__(self):
        return TSeries._raw(tuple(-a for a in self._c))

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return TSeries._raw(tuple(a - b for a, b in zip(self._c, o._c)))

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        if isinstance(other, TSeries):
            if other.order != self.order:
                raise OrderMismatch(
                    f"series orders differ: {self.order} vs {other.order}"
                )
            a, b = self._c, other._c
            n = len(a)
            out = [mpq(0)] * n
            for i in range(n):
                ai = a[i]
                if ai:
                    for j in range(n - i):
                        if b[j]:
                            out[i + j] += ai * b[j]
            return TSeries._raw(tuple(out))
        try:
            v = exact(other)
        except TypeError:
            return NotImplemented
        return TSeries._raw(tuple(a * v for a in self._c))

    __rmul__ = __mul__

    def invert(self) -> "TSeries":
        a = self._c
        if a[0] == 0:
            raise InvertNonUnit("constant term is zero; series is not a unit")
        inv0 = 1 / a[0]
        out = [inv0]
        for n in range(1, len(a)):
            acc = mpq(0)
            for k in range(1, n + 1):
                if a[k]:
                    acc += a[k] * out[n - k]
            out.append(-acc * inv0)
        return TSeries._raw(tuple(out))

    def __truediv__(self, other):
        if isinstance(other, TSeries):
            return self * other.invert()
        try:
            v = exact(other)
        except TypeError:
            return NotImplemented
        if v == 0:
            raise DivByZero("division of a series by zero")
        return TSeries._raw(tuple(a / v for a in self._c))

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o * self.invert()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.invert() ** (-n)
        result = TSeries._raw((mpq(1),) + (mpq(0),) * self.order)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def dilate(self, c) -> "TSeries":
        """Substitute ``t -> c*t``."""
        c = exact(c)
        out, p = [], mpq(1)
        for a in self._c:
            out.append(a * p)
            p *= c
        return TSeries._raw(tuple(out))

    def is_zero(self) -> bool:
        return not any(self._c)

    def __bool__(self) -> bool:
        return any(self._c)

    def __eq__(self, other):
        if isinstance(other, TSeries):
            return self._c == other._c
        try:
            v = exact(other)
        except TypeError:
            return NotImplemented
        return self._c[0] == v and not any(self._c[1:])

    def __hash__(self):
        if not any(self._c[1:]):
            return hash(self._c[0])
        return hash(self._c)

    def __repr__(self):
        terms = []
        for n, a in enumerate(self._c):
            if a:
                terms.append(f"{a}" if n == 0 else f"({a})*t^{n}")
        body = " + ".join(terms) if terms else "0"
        return f"TSeries({body} + O(t^{self.order + 1}))"


Scalarish = Union[ExactScalar, TSeries]


def is_zero(x) -> bool:
    return x == 0


def fmt(x):
    """JSON-friendly exact rendering: ``"p/q"`` strings, lists for series."""
    if isinstance(x, TSeries):
        return [fmt(a) for a in x]
    x = exact(x)
    return f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class QContext:
    """The deformation base ``q`` (an exact rational, 0 < q < 1)."""

    q: ExactScalar

    def __post_init__(self):
        object.__setattr__(self, "q", exact(self.q))
        if not 0 < self.q < 1:
            raise ValueError(f"q must lie in (0, 1), got {self.q}")

    @property
    def q2(self) -> ExactScalar:
        return self.q * self.q


def qpoch(a, base, n: int):
    """``(a; base)_n``, the product of ``1 - a*base**i`` for ``i < n``.

    ``a`` may be a rational or a :class:`TSeries`; the empty product is 1.
    """
    if n < 0:
        raise ValueError("qpoch needs n >= 0")
    base = exact(base)
    result = mpq(1) if not isinstance(a, TSeries) else TSeries.constant(1, a.order)
    if not isinstance(a, TSeries):
        a = exact(a)
    p = mpq(1)
    for _ in range(n):
        result = result * (1 - a * p)
        p *= base
    return result


def qint(n: int, base) -> ExactScalar:
    """The q-number ``(1 - base**n) / (1 - base)`` = 1 + base + ... + base**(n-1)."""
    base = exact(base)
    s, p = mpq(0), mpq(1)
    for _ in range(n):
        s += p
        p *= base
    return s


def qbinom_expand(c, q, order: int) -> TSeries:
    """q-binomial series ``sum_m (c; q^2)_m / (q^2; q^2)_m t^m`` to ``t**order``."""
    if order < 0:
        raise ValueError("order must be >= 0")
    c, q2 = exact(c), exact(q) ** 2
    coeffs, num, den = [], mpq(1), mpq(1)
    for m in range(order + 1):
        coeffs.append(num / den)
        num *= 1 - c * q2**m
        den *= 1 - q2 ** (m + 1)
    return TSeries(coeffs)


def tseries_arith(lhs: TSeries, rhs: TSeries | None, op: str) -> TSeries:
    """Named entry point for the series ring operations ``add``/``mul``/``invert``."""
    if op == "add":
        return lhs + rhs
    if op == "mul":
        return lhs * rhs
    if op == "invert":
        return lhs.invert()
    raise ValueError(f"unknown series operation {op!r}")


def phi32_terminating(j: int, a2, a3, q) -> ExactScalar:
    """Terminating basic hypergeometric sum with upper parameters
    ``q^{-2j}, a2, a3``, lower parameters ``q^2, 0``, base and argument ``q^2``.
    """
    if j < 0:
        raise ValueError("j must be >= 0")
    q2 = exact(q) ** 2
    a2, a3 = exact(a2), exact(a3)
    total = mpq(0)
    top, bot, pa2, pa3, qk = mpq(1), mpq(1), mpq(1), mpq(1), mpq(1)
    for k in range(j + 1):
        total += top / (bot * bot) * pa2 * pa3 * qk
        top *= 1 - q2 ** (k - j)
        bot *= 1 - q2 ** (k + 1)
        pa2 *= 1 - a2 * q2**k
        pa3 *= 1 - a3 * q2**k
        qk *= q2
    return total


def box_eigenvalue(s, q) -> ExactScalar:
    """Eigenvalue of the invariant Laplacian on the spherical function with
    ``s = q^{2l}``: ``-(1 - 1/s)(1 - q^2 s) / (1 - q^2)^2``.
    """
    s, q2 = exact(s), exact(q) ** 2
    if s == 0:
        raise DivByZero("box_eigenvalue needs s != 0")
    return -(1 - 1 / s) * (1 - q2 * s) / (1 - q2) ** 2
