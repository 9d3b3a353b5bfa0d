"""Reciprocal sums of ``||q alpha|| ||q beta||`` and their dyadic bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import kernels
from .counting import CONSTANTS, _checkpoints, _frac
from .realnum import Interval, certify, frac_mantissa64, ilog, product_norm

LOG2 = math.log(2.0)


@dataclass
class RecsumSeries:
    """Certified sums and dyadic layer counts at each checkpoint.

    ``layers[i][k]`` is the number of ``q <= Qs[i]`` whose product lies in
    ``[2**-(k+1), 2**-k)``.
    """

    Qs: list[int]
    sums: list[Interval]
    layers: list[list[int]]

    def diag_count(self, i: int, k: int) -> int:
        """``|{q <= Q_i : product < 2**-k}|`` (T = 1/2 count at eps = 2**-k)."""
        return sum(self.layers[i][max(k, 0):])


def _exact_term(alpha, beta, q: int) -> tuple[Interval, int]:
    p = product_norm(alpha, beta, q, 96)
    recip = Interval(1 / p.hi, 1 / p.lo)
    k = -math.frexp(float(p.mid))[1]

    def below(j):  # product < 2**-j
        return certify(lambda prec: product_norm(alpha, beta, q, prec).lt(Fraction(1, 2 ** j)))

    while not below(k):
        k -= 1
    while below(k + 1):
        k += 1
    return recip, k


def _summation_factor(n: int) -> Fraction:
    return Fraction(n + 1, 1 << 52)


def recsum_series(pair, Qs: Sequence) -> RecsumSeries:
    alpha, beta = pair
    uniq, floors = _checkpoints(Qs)
    ma, mb = frac_mantissa64(alpha), frac_mantissa64(beta)
    nl = kernels.NLAYERS
    total = Interval.exact(0)
    layers = [0] * nl
    by_cp = {}
    prev = 0
    for cp in uniq:
        q0 = prev + 1
        if ma is not None and mb is not None:
            s_lo, s_hi, n, seg_layers, unc = kernels.recsum_seg(ma[0], ma[1], mb[0], mb[1], q0, cp)
            f = _summation_factor(n)
            total += Interval(Fraction(s_lo) * (1 - f), Fraction(s_hi) * (1 + f))
            layers = [a + b for a, b in zip(layers, seg_layers)]
        else:
            unc = range(q0, cp + 1)
        for q in unc:
            term, k = _exact_term(alpha, beta, q)
            total += term
            if k >= len(layers):
                layers += [0] * (k + 1 - len(layers))
            layers[k] += 1
        total = total.round_out(80)
        by_cp[cp] = (total, list(layers))
        prev = cp
    return RecsumSeries(floors, [by_cp[f][0] for f in floors], [by_cp[f][1] for f in floors])


def recsum(pair, Q) -> Interval:
    """Enclosure of the sum over ``1 <= q <= floor(Q)`` of ``1/(||q a|| ||q b||)``."""
    return recsum_series(pair, [Q]).sums[0]


def recsum_upper_interval(Q, phiQ, prec: int = 128) -> Interval:
    Q, phi = _frac(Q), _frac(phiQ)
    if not 0 < phi <= Fraction(1, 4):
        raise ValueError("phiQ must lie in (0, 1/4]")
    L = ilog(Interval.exact(Q / phi), prec)
    return CONSTANTS.C3 * Q * L.square() + CONSTANTS.C4 * (Q / phi) * L


def recsum_upper(Q, phiQ) -> float:
    """``C3 Q log(Q/phi)^2 + C4 (Q/phi) log(Q/phi)``."""
    return float(recsum_upper_interval(Q, phiQ))


def log_plus(x: float) -> float:
    return max(1.0, math.log(x))


def lower_ratio(pair, Q, total: Interval | None = None) -> float:
    """Sum divided by ``Q (log+ Q)^2``; a trend statistic, not a verdict."""
    Q = _frac(Q)
    if total is None:
        total = recsum(pair, Q)
    return float(total.mid) / (float(Q) * log_plus(float(Q)) ** 2)


def floor_log2(x: Fraction) -> int:
    """``K`` with ``2**K <= x < 2**(K+1)`` for rational ``x > 0``."""
    k = x.numerator.bit_length() - x.denominator.bit_length()
    while Fraction(2) ** k > x:
        k -= 1
    while Fraction(2) ** (k + 1) <= x:
        k += 1
    return k


@dataclass
class RecsumReport:
    Q: Fraction
    sum: Interval
    upper_bound: float
    lower_ratio: float
    dyadic_majorant: int
    holds_upper: bool
    holds_dyadic: bool
    K: int = 0
    empty_beyond_K: bool = True
    coarse_bound: int = 0
    holds_coarse: bool = True
    lower_sandwich: int = 0
    upper_sandwich: int = 0
    corollary_chain: float = 0.0
    chain_below_upper: bool = True
    diag_counts: list[int] = field(default_factory=list, repr=False)
    upper_bound_width: float = 0.0


def _corollary_chain(Q: Fraction, phi: Fraction, K: int) -> float:
    """Majorant obtained by feeding the T = 1/2 estimate into every layer k >= 5."""
    Qf, pf = float(Q), float(phi)
    tail = 0.0
    for k in range(5, K + 1):
        per_layer = 4 * LOG2 * Qf * k * 2.0 ** -k + CONSTANTS.C2 * LOG2 * k * (2.0 ** -k * Qf / pf) ** (2 / 3)
        tail += 2.0 ** (k + 1) * per_layer
    return 4 * 2 ** 5 * Qf + tail


def dyadic_report(pair, Q, phiQ, series: RecsumSeries | None = None, index: int = 0) -> RecsumReport:
    Q, phi = _frac(Q), _frac(phiQ)
    if series is None:
        series = recsum_series(pair, [Q])
        index = 0
    total = series.sums[index]
    K = floor_log2(Q / phi)
    counts = [series.diag_count(index, k) for k in range(0, len(series.layers[index]) + 1)]
    majorant = sum(2 ** (k + 1) * counts[k] for k in range(1, K + 1))
    empty = all(c == 0 for c in counts[K + 1:])
    coarse = 4 * 2 ** 5 * Q + sum(2 ** (k + 1) * counts[k] for k in range(5, K + 1))
    layer = series.layers[index]
    lower_sw = sum(2 ** k * n for k, n in enumerate(layer))
    upper_sw = sum(2 ** (k + 1) * n for k, n in enumerate(layer))
    upper = recsum_upper_interval(Q, phi)
    chain = _corollary_chain(Q, phi, K)
    return RecsumReport(
        Q=Q, sum=total, upper_bound=float(upper),
        lower_ratio=lower_ratio(pair, Q, total),
        dyadic_majorant=majorant,
        holds_upper=total.hi <= upper.lo,
        holds_dyadic=total.hi <= majorant,
        K=K, empty_beyond_K=empty,
        coarse_bound=int(coarse), holds_coarse=total.hi < coarse,
        lower_sandwich=lower_sw, upper_sandwich=upper_sw,
        corollary_chain=chain, chain_below_upper=chain <= float(upper.lo),
        diag_counts=counts[: K + 2],
        upper_bound_width=float(upper.width),
    )


def dyadic_check(pair, Q, phiQ) -> RecsumReport:
    """Reciprocal sum against the dyadic layer majorant and the closed-form bound."""
    return dyadic_report(pair, Q, phiQ)
