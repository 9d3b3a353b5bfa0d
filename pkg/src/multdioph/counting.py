"""Exact counts of ``M(eps, T, Q)`` and the main-term / error-bound verdicts."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from . import kernels
from .errors import ConditionViolated, UndecidablePredicate
from .realnum import (
    DEFAULT_MAX_PRECISION, ExpRational, Interval, RealSpec, as_positive, certify,
    fixed, frac_mantissa64, icbrt, ilog, product_norm,
)

Pair = tuple[RealSpec, RealSpec]


@dataclass(frozen=True)
class Constants:
    C1: int = 3 ** 28
    C2: int = 4 * 3 ** 28
    C3: int = 12
    C4: int = 3 ** 32
    D3: int = 3 ** (2 * 3 ** 2)
    M_lip: int = 5
    C_L: int = 12

    @property
    def C5(self) -> int:
        return 8 * self.D3 * self.M_lip * self.C_L ** 2

    def audit(self) -> dict[str, bool]:
        return {
            "C2 == 4*C1": self.C2 == 4 * self.C1,
            "D3 == 3**18": self.D3 == 3 ** 18,
            "C5 == 8*D3*5*12**2": self.C5 == 8 * self.D3 * 5 * 12 ** 2,
            "5*C5 < C1": 5 * self.C5 < self.C1,
        }


CONSTANTS = Constants()


@dataclass(frozen=True)
class CountParams:
    eps: ExpRational
    T: Fraction
    Q: Fraction

    def __init__(self, eps, T, Q):
        object.__setattr__(self, "eps", as_positive(eps))
        object.__setattr__(self, "T", _frac(T))
        object.__setattr__(self, "Q", _frac(Q))
        if self.T <= 0:
            raise ValueError("T must be positive")
        if self.Q < 1:
            raise ValueError("Q must be at least 1")

    @property
    def qmax(self) -> int:
        return math.floor(self.Q)

    def log_ratio(self, prec: int = 128) -> Interval:
        """Enclosure of ``log(T**2 / eps)``."""
        r = self.T * self.T / self.eps.coeff
        if r == 1:
            return Interval.exact(-self.eps.power)
        return ilog(Interval.exact(r), prec) - self.eps.power

    def log_ratio_exact(self) -> Optional[Fraction]:
        if self.T * self.T == self.eps.coeff:
            return -self.eps.power
        return None

    def require_theorem_mode(self) -> None:
        """Raise unless ``eps / T**2 <= e**-2``."""
        exact = self.log_ratio_exact()
        if exact is not None:
            ok = exact >= 2
        else:
            ok = certify(lambda p: self.log_ratio(p).ge(2), what="eps/T^2 <= e^-2")
        if not ok:
            raise ConditionViolated(f"eps/T^2 > e^-2 for eps={self.eps}, T={self.T}")

    def require_corollary_mode(self) -> None:
        if self.T != Fraction(1, 2):
            raise ConditionViolated("corollary mode needs T = 1/2")
        self.require_theorem_mode()


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(str(x))
    if isinstance(x, str):
        from .realnum import _parse_fraction
        return _parse_fraction(x)
    return Fraction(x)


@dataclass
class CountReport:
    count: int
    main_term: float
    error_bound: float
    discrepancy: float
    holds: bool
    note: str = ""
    main_term_interval: Optional[Interval] = field(default=None, repr=False)
    error_bound_interval: Optional[Interval] = field(default=None, repr=False)


# ---------------------------------------------------------------------------
# exact per-q evaluation

def _box_q_at(alpha, beta, q: int, eps: ExpRational, T: Fraction, p: int) -> Optional[int]:
    one = 1 << p
    a_lo, a_hi = fixed(alpha, p)
    b_lo, b_hi = fixed(beta, p)
    xa, xb = q * a_lo, q * a_hi
    ya, yb = q * b_lo, q * b_hi
    t_lo, t_hi = math.floor(T * one), math.ceil(T * one)
    e = eps.interval(p)
    e_lo, e_hi = math.floor(e.lo * one * one), math.ceil(e.hi * one * one)

    def absiv(c, lo, hi):
        lo, hi = c * one + lo, c * one + hi
        if lo >= 0:
            return lo, hi
        if hi <= 0:
            return -hi, -lo
        return 0, max(-lo, hi)

    count = 0
    undecided = False
    for k in range(-((t_hi + xb) >> p) - 1, ((t_hi - xa) >> p) + 2):
        xl, xh = absiv(k, xa, xb)
        if xl > t_hi:
            continue
        c1 = xh <= t_lo
        for m in range(-((t_hi + yb) >> p) - 1, ((t_hi - ya) >> p) + 2):
            yl, yh = absiv(m, ya, yb)
            if yl > t_hi:
                continue
            c2 = yh <= t_lo
            if xl * yl >= e_hi:
                continue
            c3 = xh * yh < e_lo
            if c1 and c2 and c3:
                count += 1
            else:
                undecided = True
    return None if undecided else count


def exact_box_count_q(alpha, beta, q: int, eps, T,
                      max_precision: int = DEFAULT_MAX_PRECISION) -> int:
    """Points of ``M`` with this q, decided at escalating precision."""
    eps = as_positive(eps)
    T = _frac(T)
    p = 64
    while True:
        r = _box_q_at(alpha, beta, q, eps, T, p)
        if r is not None:
            return r
        if p >= max_precision:
            raise UndecidablePredicate(f"boundary decision at q={q} undecided at {p} bits")
        p = min(2 * p, max_precision)


def exact_diag_q(alpha, beta, q: int, eps, max_precision: int = DEFAULT_MAX_PRECISION) -> bool:
    """Certified ``||q alpha|| ||q beta|| < eps``."""
    eps = as_positive(eps)
    return certify(lambda p: product_norm(alpha, beta, q, p).lt(eps.interval(p)),
                   max_precision, what=f"product_norm < eps at q={q}")


# ---------------------------------------------------------------------------
# q-loop drivers

def _segments(checkpoints: Sequence[int], jobs: int, block: int = 1 << 18):
    """Split ``[1, max(checkpoints)]`` into (q0, q1, checkpoint index) blocks."""
    out = []
    prev = 0
    for idx, cp in enumerate(checkpoints):
        q0 = prev + 1
        if jobs > 1:
            step = max(block, (cp - prev) // (4 * jobs) + 1)
        else:
            step = cp - prev
        while q0 <= cp:
            q1 = min(cp, q0 + step - 1)
            out.append((q0, q1, idx))
            q0 = q1 + 1
        prev = cp
    return out


def _run_blocks(fn, tasks, jobs: int):
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, tasks))
    return [fn(t) for t in tasks]


def _box_block(task):
    alpha, beta, eps, T, q0, q1, max_precision = task
    ma, mb = frac_mantissa64(alpha), frac_mantissa64(beta)
    if ma is None or mb is None:
        return sum(exact_box_count_q(alpha, beta, q, eps, T, max_precision)
                   for q in range(q0, q1 + 1))
    t_lo, t_hi = Interval.exact(T).float_bounds()
    e_lo, e_hi = eps.interval(128).float_bounds()
    count, unc = kernels.count_box_seg(ma[0], ma[1], mb[0], mb[1], q0, q1, t_lo, t_hi, e_lo, e_hi)
    return count + sum(exact_box_count_q(alpha, beta, q, eps, T, max_precision) for q in unc)


def _diag_block(task):
    alpha, beta, eps, q0, q1, max_precision = task
    ma, mb = frac_mantissa64(alpha), frac_mantissa64(beta)
    if ma is None or mb is None:
        return sum(exact_diag_q(alpha, beta, q, eps, max_precision) for q in range(q0, q1 + 1))
    e_lo, e_hi = eps.interval(128).float_bounds()
    count, unc = kernels.count_diag_seg(ma[0], ma[1], mb[0], mb[1], q0, q1, e_lo, e_hi)
    return count + sum(exact_diag_q(alpha, beta, q, eps, max_precision) for q in unc)


def _cumulate(results, tasks, n):
    per = [0] * n
    for r, (_, _, idx) in zip(results, tasks):
        per[idx] += r
    out, acc = [], 0
    for v in per:
        acc += v
        out.append(acc)
    return out


def _checkpoints(Qs) -> tuple[list[int], list[int]]:
    floors = [math.floor(_frac(Q)) for Q in Qs]
    if any(f < 1 for f in floors):
        raise ValueError("Q must be at least 1")
    uniq = sorted(set(floors))
    return uniq, floors


def count_M_series(pair: Pair, eps, T, Qs: Sequence, jobs: int = 1,
                   max_precision: int = DEFAULT_MAX_PRECISION) -> list[int]:
    """``|M(eps, T, Q)|`` for several Q in one pass over q."""
    alpha, beta = pair
    eps, T = as_positive(eps), _frac(T)
    uniq, floors = _checkpoints(Qs)
    tasks = _segments(uniq, jobs)
    results = _run_blocks(_box_block, [(alpha, beta, eps, T, q0, q1, max_precision)
                                       for q0, q1, _ in tasks], jobs)
    cum = dict(zip(uniq, _cumulate(results, tasks, len(uniq))))
    return [cum[f] for f in floors]


def count_M(pair: Pair, params: CountParams, jobs: int = 1,
            max_precision: int = DEFAULT_MAX_PRECISION) -> int:
    """Cardinality of ``{(p1, p2, q): |p1+q a||p2+q b| < eps, max(..) <= T, 0 < q <= Q}``."""
    return count_M_series(pair, params.eps, params.T, [params.Q], jobs, max_precision)[0]


def count_M_diag_series(pair: Pair, eps, Qs: Sequence, jobs: int = 1,
                        max_precision: int = DEFAULT_MAX_PRECISION) -> list[int]:
    alpha, beta = pair
    eps = as_positive(eps)
    uniq, floors = _checkpoints(Qs)
    tasks = _segments(uniq, jobs)
    results = _run_blocks(_diag_block, [(alpha, beta, eps, q0, q1, max_precision)
                                        for q0, q1, _ in tasks], jobs)
    cum = dict(zip(uniq, _cumulate(results, tasks, len(uniq))))
    return [cum[f] for f in floors]


def count_M_diag(pair: Pair, eps, Q, jobs: int = 1,
                 max_precision: int = DEFAULT_MAX_PRECISION) -> int:
    """Number of ``0 < q <= Q`` with ``||q alpha|| ||q beta|| < eps``."""
    return count_M_diag_series(pair, eps, [Q], jobs, max_precision)[0]


# ---------------------------------------------------------------------------
# main term, error bound, verdicts

def main_term_interval(params: CountParams, prec: int = 128) -> Interval:
    params.require_theorem_mode()
    return 4 * params.eps.interval(prec) * params.Q * (params.log_ratio(prec) + 1)


def main_term(params: CountParams) -> float:
    """``4 eps Q (log(T^2/eps) + 1)``, the volume of Z."""
    return float(main_term_interval(params))


def _pow23(x: Interval, prec: int) -> Interval:
    return icbrt(x, prec).square()


def _phi_interval(phiQ) -> Interval:
    phi = phiQ if isinstance(phiQ, Interval) else Interval.exact(_frac(phiQ))
    if phi.lo <= 0 or phi.hi > Fraction(1, 4):
        raise ValueError("phiQ must lie in (0, 1/4]")
    return phi


def error_bound_interval(params: CountParams, phiQ, prec: int = 128) -> Interval:
    params.require_theorem_mode()
    phi = _phi_interval(phiQ)
    ratio = params.eps.interval(prec) * params.Q / phi
    return CONSTANTS.C1 * (1 + 2 * params.T) ** 2 * params.log_ratio(prec) * _pow23(ratio, prec)


def error_bound(params: CountParams, phiQ) -> float:
    """``C1 (1+2T)^2 log(T^2/eps) (eps Q / phi(Q))^(2/3)``."""
    return float(error_bound_interval(params, phiQ))


def corollary_main_interval(eps, Q, prec: int = 128) -> Interval:
    eps = as_positive(eps)
    return 4 * eps.interval(prec) * _frac(Q) * (1 - (eps.log_interval(prec) + ilog(Interval.exact(4), prec)))


def corollary_bound_interval(eps, Q, phiQ, prec: int = 128) -> Interval:
    eps = as_positive(eps)
    ratio = eps.interval(prec) * _frac(Q) / _phi_interval(phiQ)
    return -CONSTANTS.C2 * eps.log_interval(prec) * _pow23(ratio, prec)


def _verdict(count: int, main_fn, bound_fn) -> tuple[bool, Interval, Interval]:
    p = 128
    while True:
        main, bound = main_fn(p), bound_fn(p)
        v = abs(main - count).le(bound)
        if v is not None:
            return v, main, bound
        if p >= 1024:
            raise UndecidablePredicate("discrepancy vs bound undecided")
        p *= 2


def _report(count, holds, main, bound, note=""):
    return CountReport(count=count, main_term=float(main), error_bound=float(bound),
                       discrepancy=abs(count - float(main)), holds=holds, note=note,
                       main_term_interval=main, error_bound_interval=bound)


def _empty_range_note(params: CountParams, phiQ, count: int) -> str:
    phi = _phi_interval(phiQ)
    if (params.eps.interval(128) * params.Q).lt(phi) is True:
        return "eps*Q < phi(Q): M is empty" if count == 0 else \
            "eps*Q < phi(Q) but count > 0: phiQ is not a valid witness"
    return ""


def _suspect(pair, params, phiQ) -> str:
    from .phi import witness_is_valid
    if not witness_is_valid(pair, params.Q, phiQ):
        return "violation: phiQ is not a valid witness for q <= Q"
    return "violation with a valid witness: implementation defect"


def theorem_report(pair: Pair, params: CountParams, phiQ, count: Optional[int] = None,
                   jobs: int = 1) -> CountReport:
    """Check the counting estimate ``|count - main| <= bound`` for one cell."""
    params.require_theorem_mode()
    if count is None:
        count = count_M(pair, params, jobs=jobs)
    holds, main, bound = _verdict(count, lambda p: main_term_interval(params, p),
                                  lambda p: error_bound_interval(params, phiQ, p))
    note = _empty_range_note(params, phiQ, count)
    if not holds:
        note = _suspect(pair, params, phiQ)
    return _report(count, holds, main, bound, note)


def corollary_report(pair: Pair, eps, Q, phiQ, count: Optional[int] = None,
                     jobs: int = 1) -> CountReport:
    """The ``T = 1/2`` specialisation, counted with the direct q-loop."""
    params = CountParams(eps, Fraction(1, 2), Q)
    params.require_corollary_mode()
    if count is None:
        count = count_M_diag(pair, params.eps, params.Q, jobs=jobs)
    holds, main, bound = _verdict(count, lambda p: corollary_main_interval(params.eps, params.Q, p),
                                  lambda p: corollary_bound_interval(params.eps, params.Q, phiQ, p))
    note = _empty_range_note(params, phiQ, count)
    if not holds:
        note = _suspect(pair, params, phiQ)
    return _report(count, holds, main, bound, note)
