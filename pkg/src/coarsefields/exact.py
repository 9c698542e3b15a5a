"""Exact scalars: rationals via :mod:`fractions` and a small Gaussian-rational type."""

from __future__ import annotations

from fractions import Fraction
from math import lcm
from numbers import Rational
from typing import Iterable

from .errors import StructuralError


def q(value) -> Fraction:
    """Coerce ``value`` to a Fraction.

    Accepts ints, Fractions, decimal/fraction strings and ``[num, den]`` pairs
    (the on-disk encoding). Floats are rejected so exactness is never lost silently.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise StructuralError(f"not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, Rational):
        return Fraction(value.numerator, value.denominator)
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        num, den = value
        if not isinstance(num, int) or not isinstance(den, int) or den == 0:
            raise StructuralError(f"bad rational pair: {value!r}")
        return Fraction(num, den)
    raise StructuralError(f"not a rational: {value!r}")


def pair(x: Fraction) -> list[int]:
    x = Fraction(x)
    return [x.numerator, x.denominator]


def common_scale(values: Iterable[Fraction]) -> int:
    """Least common denominator of ``values`` (1 for an empty iterable)."""
    out = 1
    for v in values:
        out = lcm(out, Fraction(v).denominator)
    return out


class QI:
    """Gaussian rational ``re + im*i`` with exact arithmetic."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", q(re) if not isinstance(re, Fraction) else re)
        object.__setattr__(self, "im", q(im) if not isinstance(im, Fraction) else im)

    def __setattr__(self, name, value):
        raise AttributeError("QI is immutable")

    @staticmethod
    def lift(x) -> "QI":
        if isinstance(x, QI):
            return x
        if isinstance(x, complex):
            raise StructuralError("float complex passed to exact arithmetic")
        return QI(q(x), Fraction(0))

    def __add__(self, other):
        o = QI.lift(other)
        return QI(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return QI(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-QI.lift(other))

    def __rsub__(self, other):
        return QI.lift(other) - self

    def __mul__(self, other):
        o = QI.lift(other)
        return QI(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = QI.lift(other)
        n = o.abs2()
        if n == 0:
            raise ZeroDivisionError("QI division by zero")
        return self * QI(o.re / n, -o.im / n)

    def __rtruediv__(self, other):
        return QI.lift(other) / self

    def conjugate(self) -> "QI":
        return QI(self.re, -self.im)

    def abs2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def __eq__(self, other):
        try:
            o = QI.lift(other)
        except StructuralError:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"QI({self.re}, {self.im})"


def exact_rank(rows) -> int:
    """Rank of a matrix with Fraction or :class:`QI` entries (row reduction)."""
    M = [list(r) for r in rows]
    rank, n_cols = 0, len(M[0]) if M else 0
    for col in range(n_cols):
        piv = next((i for i in range(rank, len(M)) if M[i][col]), None)
        if piv is None:
            continue
        M[rank], M[piv] = M[piv], M[rank]
        p = M[rank][col]
        for i in range(len(M)):
            if i != rank and M[i][col]:
                c = M[i][col] / p
                M[i] = [a - c * b for a, b in zip(M[i], M[rank])]
        rank += 1
    return rank
