"""Empirical Diophantine type: running minima of ``q ||q alpha|| ||q beta||``."""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from fractions import Fraction

from . import kernels
from .errors import HorizonExceeded
from .realnum import Interval, frac_mantissa64, product_norm

QUARTER = Fraction(1, 4)


@dataclass
class PhiProfile:
    """Materialised records of a scan over ``1 <= q <= qmax``.

    ``value_lo/value_hi`` enclose ``q ||q a|| ||q b||``; ``rmin_lo/rmin_hi``
    enclose the running minimum up to and including ``q``.  Every q that
    lowers ``rmin_lo`` is materialised, so the running minimum at any q can
    be read back from the records.
    """

    qmax: int
    stride: int
    q: list[int] = field(default_factory=list)
    value_lo: list[float] = field(default_factory=list)
    value_hi: list[float] = field(default_factory=list)
    rmin_lo: list[float] = field(default_factory=list)
    rmin_hi: list[float] = field(default_factory=list)

    def _index(self, q: int) -> int:
        return bisect.bisect_right(self.q, q) - 1

    def running_min(self, q: int) -> Interval:
        i = self._index(q)
        return Interval(Fraction(self.rmin_lo[i]), Fraction(self.rmin_hi[i]))

    def record_lows(self) -> list[int]:
        out = []
        prev = math.inf
        for q, lo in zip(self.q, self.rmin_lo):
            if lo < prev:
                out.append(q)
            prev = lo
        return out

    def rows(self):
        return zip(self.q, self.value_lo, self.value_hi, self.rmin_lo, self.rmin_hi)


def _exact_value(alpha, beta, q: int) -> tuple[float, float]:
    v = product_norm(alpha, beta, q, 96) * q
    return v.float_bounds()


def phi_profile(pair, Qmax: int, stride: int = 1) -> PhiProfile:
    """Scan ``1..Qmax`` keeping exact running minima."""
    Qmax, stride = int(Qmax), int(stride)
    if Qmax < 1 or stride < 1:
        raise ValueError("Qmax and stride must be positive")
    alpha, beta = pair
    prof = PhiProfile(Qmax, stride)
    ma, mb = frac_mantissa64(alpha), frac_mantissa64(beta)
    lo_min = hi_min = math.inf
    q0 = 1
    while q0 <= Qmax:
        if ma is not None and mb is not None:
            rq, rlo, rhi, rmlo, rmhi, q_stop, lo_min, hi_min = kernels.phi_seg(
                ma[0], ma[1], mb[0], mb[1], q0, Qmax, stride, Qmax, lo_min, hi_min)
            prof.q += rq
            prof.value_lo += rlo
            prof.value_hi += rhi
            prof.rmin_lo += rmlo
            prof.rmin_hi += rmhi
        else:
            q_stop = q0
        if q_stop > Qmax:
            break
        q = q_stop
        vlo, vhi = _exact_value(alpha, beta, q)
        new_min = vlo < lo_min
        lo_min, hi_min = min(lo_min, vlo), min(hi_min, vhi)
        if new_min or q == 1 or q % stride == 0 or q == Qmax:
            prof.q.append(q)
            prof.value_lo.append(vlo)
            prof.value_hi.append(vhi)
            prof.rmin_lo.append(lo_min)
            prof.rmin_hi.append(hi_min)
        q0 = q + 1
    return prof


def phi_at(profile: PhiProfile, Q) -> Fraction:
    """Largest witness for ``phi(Q)`` the profile supports, clamped to 1/4."""
    if Q > profile.qmax:
        raise HorizonExceeded(f"Q={Q} beyond profile horizon {profile.qmax}")
    if Q < 1:
        raise ValueError("Q must be at least 1")
    lo = Fraction(profile.running_min(math.floor(Q)).lo)
    assert lo <= QUARTER, "q ||q a|| ||q b|| > 1/4 at q = 1 is impossible"
    return min(QUARTER, lo)


def witness_is_valid(pair, Q, phiQ) -> bool:
    """True when ``q ||q a|| ||q b|| >= phiQ`` is certified for all ``q <= Q``."""
    prof = phi_profile(pair, math.floor(Q), stride=max(1, math.floor(Q)))
    return Fraction(phiQ) <= Fraction(prof.running_min(math.floor(Q)).lo)


def log_plus(x: float) -> float:
    return max(1.0, math.log(x))


@dataclass(frozen=True)
class Growth:
    """``f(q)`` for Mad-type scores: ``const c``, ``(log+ q)^lam`` or ``log+ q * log+ log+ q``."""

    kind: str
    param: float = 1.0

    def __post_init__(self):
        if self.kind not in ("const", "log", "loglog"):
            raise ValueError(f"unknown growth function {self.kind!r}")
        if self.kind == "log" and self.param < 0:
            raise ValueError("exponent must be nonnegative")
        if self.kind == "const" and self.param <= 0:
            raise ValueError("constant must be positive")

    @classmethod
    def parse(cls, text: str) -> "Growth":
        kind, _, arg = text.partition(":")
        return cls(kind, float(arg) if arg else 1.0)

    def __call__(self, q: int) -> float:
        if self.kind == "const":
            return self.param
        if self.kind == "log":
            return log_plus(q) ** self.param
        lq = log_plus(q)
        return lq * log_plus(lq)


def mad_score(profile: PhiProfile, f: Growth) -> float:
    """Finite-horizon lower estimate of ``inf_q f(q) q ||q a|| ||q b||``.

    All admissible ``f`` are non-decreasing, so the infimum is attained at a
    record low of the value sequence.
    """
    if not profile.q:
        raise ValueError("empty profile")
    return min(f(q) * lo for q, lo in zip(profile.q, profile.value_lo))
