"""Certified real arithmetic.

Irrationals are described exactly (:class:`QuadraticSurd`, :class:`DecimalBall`)
and evaluated to closed intervals with dyadic endpoints.  Every strict
inequality in the package is decided through :func:`decide_less` or the
three-valued comparisons of :class:`Interval`, which answer ``None`` rather
than guess when two enclosures overlap.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from typing import Callable, Optional, Union

from mpmath import libmp

from .errors import AmbiguousNearestInteger, UndecidablePredicate

DEFAULT_MAX_PRECISION = 256
START_PRECISION = 64


# ---------------------------------------------------------------------------
# intervals

def _floor_div_pow2(x: Fraction, bits: int) -> int:
    return math.floor(x * (1 << bits)) if bits >= 0 else math.floor(x / (1 << -bits))


@dataclass(frozen=True, slots=True)
class Interval:
    """Closed interval ``[lo, hi]`` with exact rational endpoints."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def exact(cls, x) -> "Interval":
        x = Fraction(x)
        return cls(x, x)

    @classmethod
    def hull(cls, *xs: "Interval") -> "Interval":
        return cls(min(x.lo for x in xs), max(x.hi for x in xs))

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        other = _coerce(other)
        return Interval(self.lo + other.lo, self.hi + other.hi)

    __radd__ = __add__

    def __sub__(self, other):
        other = _coerce(other)
        return Interval(self.lo - other.hi, self.hi - other.lo)

    def __rsub__(self, other):
        return _coerce(other) - self

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __mul__(self, other):
        other = _coerce(other)
        if self.lo >= 0 and other.lo >= 0:
            return Interval(self.lo * other.lo, self.hi * other.hi)
        ps = (self.lo * other.lo, self.lo * other.hi, self.hi * other.lo, self.hi * other.hi)
        return Interval(min(ps), max(ps))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce(other)
        if other.lo <= 0 <= other.hi:
            raise ZeroDivisionError("divisor interval contains zero")
        return self * Interval(1 / other.hi, 1 / other.lo)

    def __rtruediv__(self, other):
        return _coerce(other) / self

    def __abs__(self):
        if self.lo >= 0:
            return self
        if self.hi <= 0:
            return -self
        return Interval(Fraction(0), max(-self.lo, self.hi))

    def square(self) -> "Interval":
        a = abs(self)
        return Interval(a.lo * a.lo, a.hi * a.hi)

    # queries --------------------------------------------------------------
    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def __float__(self):
        return float(self.mid)

    def contains(self, x) -> bool:
        if isinstance(x, Interval):
            return self.lo <= x.lo and x.hi <= self.hi
        return self.lo <= x <= self.hi

    def lt(self, other) -> Optional[bool]:
        """Three-valued ``self < other``."""
        other = _coerce(other)
        if self.hi < other.lo:
            return True
        if self.lo >= other.hi:
            return False
        return None

    def le(self, other) -> Optional[bool]:
        other = _coerce(other)
        if self.hi <= other.lo:
            return True
        if self.lo > other.hi:
            return False
        return None

    def gt(self, other) -> Optional[bool]:
        return _coerce(other).lt(self)

    def ge(self, other) -> Optional[bool]:
        return _coerce(other).le(self)

    def round_out(self, bits: int) -> "Interval":
        """Snap outward to the grid ``2**-bits``."""
        lo = Fraction(_floor_div_pow2(self.lo, bits), 1) / (1 << bits)
        hi = -Fraction(_floor_div_pow2(-self.hi, bits), 1) / (1 << bits)
        return Interval(lo, hi)

    def float_bounds(self) -> tuple[float, float]:
        """Doubles ``(a, b)`` with ``a <= lo`` and ``hi <= b``."""
        return float_down(self.lo), float_up(self.hi)

    def __repr__(self):
        return f"Interval({float(self.lo)!r}, {float(self.hi)!r})"


IntervalValue = Interval


def _coerce(x) -> Interval:
    if isinstance(x, Interval):
        return x
    return Interval.exact(x)


def float_down(x: Fraction) -> float:
    f = float(x)
    if Fraction(f) > x:
        f = math.nextafter(f, -math.inf)
    return f


def float_up(x: Fraction) -> float:
    f = float(x)
    if Fraction(f) < x:
        f = math.nextafter(f, math.inf)
    return f


# ---------------------------------------------------------------------------
# elementary functions on intervals (mpmath directed rounding, widened)

def _mpf_to_fraction(m) -> Fraction:
    sign, man, exp, _ = m
    v = Fraction(int(man)) * (Fraction(2) ** exp)
    return -v if sign else v


def _fraction_to_mpf(x: Fraction, prec: int, rnd: str):
    return libmp.from_rational(x.numerator, x.denominator, prec, rnd)


def _monotone(fn, x: Interval, prec: int, increasing: bool = True) -> Interval:
    wp = prec + 20
    lo_in, hi_in = (x.lo, x.hi) if increasing else (x.hi, x.lo)
    lo = _mpf_to_fraction(fn(_fraction_to_mpf(lo_in, wp, "f" if increasing else "c"), wp, "f"))
    hi = _mpf_to_fraction(fn(_fraction_to_mpf(hi_in, wp, "c" if increasing else "f"), wp, "c"))
    # a few ulps of slack on top of the directed rounding
    pad_lo = abs(lo) * Fraction(1, 1 << (wp - 4)) + Fraction(1, 1 << (2 * wp))
    pad_hi = abs(hi) * Fraction(1, 1 << (wp - 4)) + Fraction(1, 1 << (2 * wp))
    return Interval(lo - pad_lo, hi + pad_hi).round_out(prec + 8)


def ilog(x: Interval, prec: int = 128) -> Interval:
    if x.lo <= 0:
        raise ValueError("log of non-positive interval")
    if x.lo == x.hi == 1:
        return Interval.exact(0)
    return _monotone(libmp.mpf_log, x, prec)


def iexp(x: Interval, prec: int = 128) -> Interval:
    if x.lo == x.hi == 0:
        return Interval.exact(1)
    return _monotone(libmp.mpf_exp, x, prec)


def isqrt_iv(x: Interval, prec: int = 128) -> Interval:
    if x.lo < 0:
        raise ValueError("sqrt of negative interval")
    return _monotone(libmp.mpf_sqrt, x, prec)


def icbrt(x: Interval, prec: int = 128) -> Interval:
    if x.lo < 0:
        raise ValueError("cbrt of negative interval")
    return _monotone(libmp.mpf_cbrt, x, prec)


# ---------------------------------------------------------------------------
# real-number inputs

@dataclass(frozen=True)
class QuadraticSurd:
    """The real number ``(a + b*sqrt(d)) / c``."""

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if self.c == 0:
            raise ValueError("c must be nonzero")
        if self.d < 2 or math.isqrt(self.d) ** 2 == self.d:
            raise ValueError(f"d={self.d} must be a non-square integer >= 2")
        if self.b == 0:
            raise ValueError("b must be nonzero")

    def __str__(self):
        if (self.a, self.b, self.c) == (0, 1, 1):
            return f"sqrt:{self.d}"
        return f"quad:{self.a},{self.b},{self.c},{self.d}"


@dataclass(frozen=True)
class DecimalBall:
    """Ball ``center +- radius``; zero radius means an exact decimal."""

    center: str
    radius: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "radius", Fraction(self.radius))
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")
        _parse_fraction(self.center)

    @property
    def center_value(self) -> Fraction:
        return _parse_fraction(self.center)

    def __str__(self):
        return f"dec:{self.center}:{self.radius}"


RealSpec = Union[QuadraticSurd, DecimalBall]

_INT = r"[+-]?\d+"
_SURD_RE = re.compile(rf"^sqrt:(\d+)$")
_QUAD_RE = re.compile(rf"^quad:({_INT}),({_INT}),({_INT}),(\d+)$")
_DEC_RE = re.compile(r"^dec:([^:\s]+):([^:\s]+)$")


def _parse_fraction(text: str) -> Fraction:
    text = text.strip()
    if "/" in text:
        return Fraction(text)
    try:
        return Fraction(Decimal(text))
    except InvalidOperation:
        raise ValueError(f"not a decimal number: {text!r}") from None


def parse_real(text: str) -> RealSpec:
    """Parse ``sqrt:D``, ``quad:A,B,C,D`` or ``dec:CENTER:RADIUS``."""
    if m := _SURD_RE.match(text):
        return QuadraticSurd(0, 1, 1, int(m.group(1)))
    if m := _QUAD_RE.match(text):
        a, b, c, d = (int(g) for g in m.groups())
        return QuadraticSurd(a, b, c, d)
    if m := _DEC_RE.match(text):
        return DecimalBall(m.group(1), _parse_fraction(m.group(2)))
    raise ValueError(f"bad real number {text!r}")


def _surd_interval(s: QuadraticSurd, bits: int) -> Interval:
    r = math.isqrt(s.d << (2 * bits))  # r <= sqrt(d)*2^bits < r+1
    lo_n, hi_n = s.a * (1 << bits) + s.b * r, s.a * (1 << bits) + s.b * (r + 1)
    if lo_n > hi_n:
        lo_n, hi_n = hi_n, lo_n
    den = s.c * (1 << bits)
    lo, hi = Fraction(lo_n, den), Fraction(hi_n, den)
    if den < 0:
        lo, hi = hi, lo
    return Interval(lo, hi)


def eval(spec: RealSpec, precision: int) -> Interval:  # noqa: A001 - public name
    """Enclosure of ``spec`` of width at most ``2**(1-precision) * max(1, |value|)``."""
    if precision < 1:
        raise ValueError("precision must be positive")
    if isinstance(spec, QuadraticSurd):
        extra = abs(spec.b).bit_length() + 1
        return _surd_interval(spec, precision + extra).round_out(precision + 1)
    center, r = spec.center_value, spec.radius
    ball = Interval(center - r, center + r)
    target = Fraction(2) ** (1 - precision) * max(1, abs(center))
    if 2 * r >= target:
        return ball
    bits = precision + 1
    while True:
        snapped = ball.round_out(bits)
        if snapped.width <= target:
            return snapped
        bits += 8


def fixed(spec: RealSpec, bits: int) -> tuple[int, int]:
    """Integers ``(lo, hi)`` with the value in ``[lo, hi] * 2**-bits``."""
    iv = eval(spec, bits + 8)
    lo = math.floor(iv.lo * (1 << bits))
    hi = math.ceil(iv.hi * (1 << bits))
    return lo, hi


def can_refine(spec: RealSpec) -> bool:
    return isinstance(spec, QuadraticSurd) or spec.radius == 0


def dist_nearest_int(spec: RealSpec, q: int, precision: int,
                     max_precision: Optional[int] = None) -> Interval:
    """Enclosure of ``||q * value||`` inside ``[0, 1/2]``."""
    if q < 1:
        raise ValueError("q must be a positive integer")
    max_precision = max_precision or max(4 * precision, DEFAULT_MAX_PRECISION)
    p = precision
    while True:
        x = eval(spec, p + q.bit_length()) * q
        n = math.floor(x.lo + Fraction(1, 2))
        half = Fraction(1, 2)
        if x.hi <= n + half:
            d = x - n
            return abs(d)
        if not can_refine(spec) or p >= max_precision:
            raise AmbiguousNearestInteger(
                f"{q}*{spec} straddles the half-integer {n + half} at {p} bits")
        p = min(2 * p, max_precision)


def product_norm(alpha: RealSpec, beta: RealSpec, q: int, precision: int,
                 max_precision: Optional[int] = None) -> Interval:
    """Enclosure of ``||q alpha|| * ||q beta||``."""
    a = dist_nearest_int(alpha, q, precision + 2, max_precision)
    b = dist_nearest_int(beta, q, precision + 2, max_precision)
    return a * b


# ---------------------------------------------------------------------------
# positive reals of the form c * e**s (used for eps)

@dataclass(frozen=True)
class ExpRational:
    """The positive real ``coeff * exp(power)`` with rational ``coeff, power``.

    Plain rationals have ``power == 0``.  The extra factor lets boundary
    values such as ``eps = e**-2`` be represented exactly.
    """

    coeff: Fraction
    power: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "coeff", Fraction(self.coeff))
        object.__setattr__(self, "power", Fraction(self.power))
        if self.coeff <= 0:
            raise ValueError("coefficient must be positive")

    @property
    def is_rational(self) -> bool:
        return self.power == 0

    def interval(self, prec: int = 128) -> Interval:
        if self.is_rational:
            return Interval.exact(self.coeff)
        return (iexp(Interval.exact(self.power), prec) * self.coeff).round_out(prec + 8)

    __call__ = interval

    def log_interval(self, prec: int = 128) -> Interval:
        return ilog(Interval.exact(self.coeff), prec) + self.power

    def __str__(self):
        if self.is_rational:
            return _fraction_str(self.coeff)
        if self.coeff == 1:
            return f"exp:{_fraction_str(self.power)}"
        return f"{_fraction_str(self.coeff)}*exp:{_fraction_str(self.power)}"


def _fraction_str(x: Fraction) -> str:
    if x.denominator == 1:
        return str(x.numerator)
    d = x.denominator
    while d % 2 == 0:
        d //= 2
    while d % 5 == 0:
        d //= 5
    if d == 1:
        return format(Decimal(x.numerator) / Decimal(x.denominator), "f")
    return f"{x.numerator}/{x.denominator}"


def parse_positive(text: str) -> ExpRational:
    """Parse ``0.001``, ``1e-3``, ``1/1000``, ``exp:-2`` or ``3*exp:-2``."""
    text = text.strip()
    coeff, power = Fraction(1), Fraction(0)
    if "exp:" in text:
        head, _, tail = text.partition("exp:")
        power = _parse_fraction(tail)
        head = head.rstrip("*")
        if head:
            coeff = _parse_fraction(head)
    else:
        coeff = _parse_fraction(text)
    return ExpRational(coeff, power)


def as_positive(x) -> ExpRational:
    if isinstance(x, ExpRational):
        return x
    if isinstance(x, str):
        return parse_positive(x)
    if isinstance(x, float):
        return ExpRational(Fraction(str(x)))
    return ExpRational(Fraction(x))


# ---------------------------------------------------------------------------
# deciding inequalities

Expr = Callable[[int], Interval]


def as_expr(x) -> Expr:
    """Turn a spec, rational, interval or callable into ``prec -> Interval``."""
    if isinstance(x, (QuadraticSurd, DecimalBall)):
        return lambda p, s=x: eval(s, p)
    if isinstance(x, Interval):
        return lambda p, v=x: v
    if isinstance(x, ExpRational):
        return x.interval
    if callable(x):
        return x
    v = Interval.exact(Fraction(x) if not isinstance(x, float) else Fraction(x))
    return lambda p: v


def decide_less(x, y, max_precision: int = DEFAULT_MAX_PRECISION) -> bool:
    """Decide ``x < y`` by doubling precision until the enclosures separate."""
    fx, fy = as_expr(x), as_expr(y)
    p = min(START_PRECISION, max_precision)
    while True:
        verdict = fx(p).lt(fy(p))
        if verdict is not None:
            return verdict
        if p >= max_precision:
            raise UndecidablePredicate(f"enclosures still overlap at {p} bits")
        p = min(2 * p, max_precision)


def certify(predicate: Callable[[int], Optional[bool]],
            max_precision: int = DEFAULT_MAX_PRECISION, what: str = "predicate") -> bool:
    """Run a three-valued ``predicate(prec)`` under the escalation schedule."""
    p = min(START_PRECISION, max_precision)
    while True:
        verdict = predicate(p)
        if verdict is not None:
            return verdict
        if p >= max_precision:
            raise UndecidablePredicate(f"{what} undecided at {p} bits")
        p = min(2 * p, max_precision)


def frac_mantissa64(spec: RealSpec) -> Optional[tuple[int, int]]:
    """``(A, w)`` with ``frac(value)`` in ``[A, A + w] * 2**-64`` modulo 1.

    Returns ``None`` when the enclosure is too wide for the fixed-point
    kernels (balls with a large radius).
    """
    lo, hi = fixed(spec, 64)
    w = hi - lo
    if w > 1 << 16:
        return None
    return lo % (1 << 64), max(w, 1)
