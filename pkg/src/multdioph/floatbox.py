"""Vectorised double-precision interval arithmetic used as a rigorous prefilter.

Every operation rounds to nearest and then steps one ulp outward, which
encloses the exact result.  Comparisons are three-valued and return int8
arrays holding ``YES``, ``NO`` or ``UNKNOWN``; an unknown entry is settled by
the exact rational path.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from .realnum import Interval, float_down, float_up

NO, YES, UNKNOWN = np.int8(0), np.int8(1), np.int8(2)
_INF = np.inf


def _down(x):
    return np.nextafter(x, -_INF)


def _up(x):
    return np.nextafter(x, _INF)


class FBox:
    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi):
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)

    @classmethod
    def of(cls, x) -> "FBox":
        if isinstance(x, FBox):
            return x
        if isinstance(x, Interval):
            return cls(*x.float_bounds())
        if isinstance(x, (int, Fraction)):
            x = Fraction(x)
            return cls(float_down(x), float_up(x))
        if isinstance(x, np.ndarray) and x.dtype.kind in "iu":
            # integers below 2**53 convert exactly
            if x.size and np.abs(x).max() >= 2 ** 53:
                raise OverflowError("integer too large for an exact double")
            f = x.astype(float)
            return cls(f, f)
        raise TypeError(f"cannot enclose {type(x).__name__}")

    def __add__(self, other):
        o = FBox.of(other)
        return FBox(_down(self.lo + o.lo), _up(self.hi + o.hi))

    __radd__ = __add__

    def __neg__(self):
        return FBox(-self.hi, -self.lo)

    def __sub__(self, other):
        return self + (-FBox.of(other))

    def __rsub__(self, other):
        return FBox.of(other) - self

    def __mul__(self, other):
        o = FBox.of(other)
        p = np.stack(np.broadcast_arrays(self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi))
        return FBox(_down(p.min(0)), _up(p.max(0)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = FBox.of(other)
        if np.any((o.lo <= 0) & (o.hi >= 0)):
            raise ZeroDivisionError("divisor box contains zero")
        return self * FBox(_down(1 / o.hi), _up(1 / o.lo))

    def __abs__(self):
        lo = np.where(self.lo >= 0, self.lo, np.where(self.hi <= 0, -self.hi, 0.0))
        hi = np.maximum(np.abs(self.lo), np.abs(self.hi))
        return FBox(lo, hi)

    def lt(self, other):
        o = FBox.of(other)
        return np.where(self.hi < o.lo, YES, np.where(self.lo >= o.hi, NO, UNKNOWN)).astype(np.int8)

    def le(self, other):
        o = FBox.of(other)
        return np.where(self.hi <= o.lo, YES, np.where(self.lo > o.hi, NO, UNKNOWN)).astype(np.int8)

    def gt(self, other):
        return FBox.of(other).lt(self)

    def ge(self, other):
        return FBox.of(other).le(self)

    def is_zero(self):
        return np.where((self.lo == 0) & (self.hi == 0), YES,
                        np.where((self.lo > 0) | (self.hi < 0), NO, UNKNOWN)).astype(np.int8)


def and3(*vals):
    """Three-valued conjunction of int8 arrays."""
    out = np.broadcast_arrays(*vals)
    acc = np.full(out[0].shape, YES, dtype=np.int8)
    for v in out:
        acc = np.where((acc == NO) | (v == NO), NO, np.where((acc == YES) & (v == YES), YES, UNKNOWN))
    return acc.astype(np.int8)
