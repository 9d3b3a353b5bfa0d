"""Rank-3 lattices: construction, sign and flow maps, certified shortest vectors
and exact lattice-point counts in the counting regions."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .counting import CONSTANTS, CountParams, _frac
from .domain import (
    DELTA_X, DELTA_Y, OUTSIDE, DecompositionPlan, FlowMap, PieceLabel, Slice, flow_map,
    in_H1, in_h1_piece, in_Z, in_z_piece, region_bbox,
)
from .errors import ConditionViolated, IndexOutOfRange, UndecidablePredicate
from .floatbox import UNKNOWN, YES, FBox
from .realnum import (
    DEFAULT_MAX_PRECISION, Interval, as_positive, certify, eval as eval_real, icbrt, isqrt_iv,
)

Entry = Callable[[int], Interval]

TAU_SIGNS = {1: (1, 1), 2: (-1, 1), 3: (1, -1), 4: (-1, -1)}


def _const(x) -> Entry:
    v = Interval.exact(Fraction(x))
    return lambda p: v


@dataclass(frozen=True)
class PairForm:
    """``diag(a, b, c) diag(sx, sy, 1)`` applied to the lattice of a pair.

    Lattice points are ``(a sx (p1 + q alpha), b sy (p2 + q beta), c q)``.
    """

    alpha: object
    beta: object
    sx: int = 1
    sy: int = 1
    flow: Optional[FlowMap] = None

    def scales(self, prec: int) -> tuple[Interval, Interval, Interval]:
        if self.flow is None:
            one = Interval.exact(1)
            return one, one, one
        return self.flow.coeffs(prec)

    def point(self, p1: int, p2: int, q: int, prec: int):
        a, b, c = self.scales(prec)
        u = eval_real(self.alpha, prec) * q + p1
        v = eval_real(self.beta, prec) * q + p2
        return a * (u * self.sx), b * (v * self.sy), c * q


@dataclass
class Basis3:
    """Three generators (rows) with entries given as ``prec -> Interval``."""

    rows: tuple
    provenance: str = "basis"
    det_exact: Optional[Fraction] = None
    form: Optional[PairForm] = None
    _memo: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def from_rationals(cls, rows, provenance: str = "rational") -> "Basis3":
        m = [[Fraction(v) for v in r] for r in rows]
        det = _det3(m)
        if det == 0:
            raise ValueError("degenerate basis")
        return cls(tuple(tuple(_const(v) for v in r) for r in m), provenance, det)

    def matrix(self, prec: int = 128) -> list[list[Interval]]:
        if prec not in self._memo:
            self._memo[prec] = [[e(prec) for e in r] for r in self.rows]
        return self._memo[prec]

    def floats(self) -> np.ndarray:
        return np.array([[float(v.mid) for v in r] for r in self.matrix(128)])

    def det_interval(self, prec: int = 128) -> Interval:
        return _det3(self.matrix(prec))

    @property
    def abs_det(self) -> Optional[Fraction]:
        return None if self.det_exact is None else abs(self.det_exact)

    def scaled(self, c) -> "Basis3":
        c = Fraction(c)
        rows = tuple(tuple((lambda p, e=e: e(p) * c) for e in r) for r in self.rows)
        det = None if self.det_exact is None else self.det_exact * c ** 3
        return Basis3(rows, f"{c}*{self.provenance}", det)


def _det3(m):
    return (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]))


def lattice_from_pair(pair) -> Basis3:
    """Rows ``(1,0,0), (0,1,0), (alpha, beta, 1)``; triangular, so det = 1."""
    alpha, beta = pair
    zero, one = _const(0), _const(1)
    rows = ((one, zero, zero), (zero, one, zero),
            (lambda p: eval_real(alpha, p), lambda p: eval_real(beta, p), one))
    return Basis3(rows, "Lambda", Fraction(1), PairForm(alpha, beta))


def apply_tau(j: int, basis: Basis3) -> Basis3:
    """Sign flips ``tau_1 = id, tau_2 = (-x,y,z), tau_3 = (x,-y,z), tau_4 = (-x,-y,z)``."""
    if j not in TAU_SIGNS:
        raise IndexOutOfRange(f"tau index {j} not in 1..4")
    sx, sy = TAU_SIGNS[j]
    signs = (sx, sy, 1)
    rows = tuple(tuple((e if s == 1 else (lambda p, e=e: -e(p))) for e, s in zip(r, signs))
                 for r in basis.rows)
    det = None if basis.det_exact is None else basis.det_exact * sx * sy
    form = None
    if basis.form is not None:
        # diagonal maps commute, so a flow already present stays outermost
        form = replace(basis.form, sx=basis.form.sx * sx, sy=basis.form.sy * sy)
    return Basis3(rows, f"tau{j}({basis.provenance})", det, form)


def apply_flow(plan: DecompositionPlan, i: int, basis: Basis3) -> Basis3:
    """Scale coordinates by the flow ``phi_i``; determinant is unchanged."""
    fm = flow_map(plan, i)
    if basis.form is not None and basis.form.flow is not None:
        raise ValueError("basis is already flowed")

    def col(k):
        return lambda p: fm.coeffs(p)[k]
    rows = tuple(tuple((lambda p, e=e, k=k: e(p) * col(k)(p)) for k, e in enumerate(r))
                 for r in basis.rows)
    form = None if basis.form is None else replace(basis.form, flow=fm)
    det = None if basis.det_exact is None else basis.det_exact * FlowMap.det_exact
    return Basis3(rows, f"phi{i}({basis.provenance})", det, form)


def lattice_j(pair, j: int, plan: Optional[DecompositionPlan] = None, i: Optional[int] = None) -> Basis3:
    b = apply_tau(j, lattice_from_pair(pair))
    if plan is not None:
        b = apply_flow(plan, i, b)
    return b


# ---------------------------------------------------------------------------
# shortest vectors

def _lll(rows: list[list[Fraction]], delta=Fraction(99, 100)) -> list[list[int]]:
    """Exact rational LLL on three rows; returns the unimodular transform."""
    n = len(rows)
    b = [r[:] for r in rows]
    U = [[int(i == j) for j in range(n)] for i in range(n)]

    def dot(u, v):
        return sum(x * y for x, y in zip(u, v))

    def gso():
        bs, mu, nb = [], [[Fraction(0)] * n for _ in range(n)], []
        for i in range(n):
            v = b[i][:]
            for j in range(i):
                mu[i][j] = dot(b[i], bs[j]) / nb[j]
                v = [x - mu[i][j] * y for x, y in zip(v, bs[j])]
            bs.append(v)
            nb.append(dot(v, v))
        return mu, nb

    k = 1
    mu, nb = gso()
    steps = 0
    while k < n:
        steps += 1
        if steps > 10_000:
            break
        for j in range(k - 1, -1, -1):
            r = round(mu[k][j])
            if r:
                b[k] = [x - r * y for x, y in zip(b[k], b[j])]
                U[k] = [x - r * y for x, y in zip(U[k], U[j])]
                mu, nb = gso()
        if nb[k] >= (delta - mu[k][k - 1] ** 2) * nb[k - 1]:
            k += 1
        else:
            b[k], b[k - 1] = b[k - 1], b[k]
            U[k], U[k - 1] = U[k - 1], U[k]
            mu, nb = gso()
            k = max(k - 1, 1)
    return U


def _snap(x: Fraction, bits: int = 96) -> Fraction:
    return Fraction(round(x * (1 << bits)), 1 << bits)


@dataclass
class Lambda1Result:
    length: Interval
    length_sq: Interval
    witness: tuple[int, int, int]
    certified: bool = True
    precision: int = 128
    box: tuple[int, int, int] = (0, 0, 0)
    candidates: int = 0
    ties: int = 0

    def __float__(self):
        return float(self.length.mid)


MAX_BOX = 200_000


def lambda1(basis: Basis3, max_precision: int = DEFAULT_MAX_PRECISION) -> Lambda1Result:
    """Certified first successive minimum.

    The basis is reduced with exact rational LLL on midpoints (a heuristic
    step; any unimodular transform is fine).  The reduced rows give a radius
    ``r`` and every vector of length at most ``r`` has coefficients bounded
    by ``sqrt(r^2 (G^-1)_kk)``; the whole box is enumerated with interval
    lengths, so the minimum is certified whatever LLL returned.
    """
    mids = [[_snap(v.mid) for v in r] for r in basis.matrix(128)]
    U = _lll(mids)
    prec = 128
    while True:
        res = _enumerate(basis, U, prec)
        target = Fraction(1, 1 << (prec // 2)) * max(Fraction(1), res.length_sq.hi)
        if res.length_sq.width <= target or prec >= max_precision:
            return res
        prec = min(2 * prec, max(max_precision, 128))


def _enumerate(basis: Basis3, U, prec: int) -> Lambda1Result:
    B = basis.matrix(prec)
    Bp = [[sum((B[m][c] * U[k][m] for m in range(3) if U[k][m]), Interval.exact(0)) for c in range(3)]
          for k in range(3)]
    G = [[sum((Bp[a][c] * Bp[b][c] for c in range(3)), Interval.exact(0)) for b in range(3)]
         for a in range(3)]
    r2 = min(sum((Bp[k][c].square() for c in range(3)), Interval.exact(0)).hi for k in range(3))
    detG = _det3(G)
    if detG.lo <= 0:
        raise UndecidablePredicate(f"Gram determinant not certified positive at {prec} bits")
    box = []
    for k in range(3):
        a, b = [m for m in range(3) if m != k]
        cof = G[a][a] * G[b][b] - G[a][b] * G[b][a]
        bound = r2 * cof.hi / detG.lo
        box.append(math.isqrt(math.floor(bound)))
    size = (2 * box[0] + 1) * (2 * box[1] + 1) * (2 * box[2] + 1)
    if size > MAX_BOX:
        raise UndecidablePredicate(f"enumeration box {box} too large")
    best = None
    all_lo = None
    cands = 0
    seen = []
    for c in itertools.product(*(range(-m, m + 1) for m in box)):
        nz = [v for v in c if v]
        if not nz or nz[0] < 0:
            continue
        cands += 1
        v = [sum((Bp[k][col] * c[k] for k in range(3) if c[k]), Interval.exact(0)) for col in range(3)]
        l2 = v[0].square() + v[1].square() + v[2].square()
        seen.append(l2)
        if all_lo is None or l2.lo < all_lo:
            all_lo = l2.lo
        if best is None or l2.hi < best[0].hi:
            best = (l2, c)
    l2, c = best
    # other +-pairs whose length cannot be separated from the minimum
    ties = sum(1 for m in seen if m.lo <= l2.hi) - 1
    length_sq = Interval(all_lo, l2.hi)
    witness = tuple(sum(c[k] * U[k][m] for k in range(3)) for m in range(3))
    # sign convention: last nonzero coefficient (q for pair lattices) positive
    if witness[max(i for i in range(3) if witness[i])] < 0:
        witness = tuple(-w for w in witness)
    return Lambda1Result(isqrt_iv(length_sq, prec), length_sq, witness, True, prec,
                         tuple(box), cands, ties)


def exhaustive_lambda1(basis: Basis3, bound: int = 10, prec: int = 128):
    """Minimum over the coefficient box ``[-bound, bound]^3`` (oracle for tests)."""
    B = basis.matrix(prec)
    best = None
    for c in itertools.product(range(-bound, bound + 1), repeat=3):
        if c == (0, 0, 0):
            continue
        v = [sum((B[k][col] * c[k] for k in range(3) if c[k]), Interval.exact(0)) for col in range(3)]
        l2 = v[0].square() + v[1].square() + v[2].square()
        if best is None or l2.hi < best[0].hi:
            best = (l2, c)
    return best


# ---------------------------------------------------------------------------
# regions

class Region:
    """A bounded set given by a three-valued predicate and an outer box."""

    def predicate(self, x, y, z, prec: int):
        raise NotImplementedError

    def bbox(self) -> tuple[float, float, float, float, float, float]:
        raise NotImplementedError

    def __str__(self):
        return type(self).__name__


@dataclass(eq=False)
class ZRegion(Region):
    eps: object
    T: Fraction
    Q: Fraction
    label: Optional[PieceLabel] = None   # None means the whole of Z

    def __post_init__(self):
        self.eps, self.T, self.Q = as_positive(self.eps), _frac(self.T), _frac(self.Q)

    def predicate(self, x, y, z, prec):
        e = self.eps.interval(prec)
        if self.label is None:
            return in_Z((x, y, z), e, self.T, self.Q)
        return in_z_piece(self.label, (x, y, z), e, self.T, self.Q)

    def bbox(self):
        T, Q = float(self.T), float(self.Q)
        e = float(self.eps.interval(64).hi) / max(T, 1e-300)
        xs, ys = (-T, T), (-T, T)
        if self.label is not None:
            k = self.label.kind
            xs = {"Z1": (0, T), "Z3": (0, T), "Z2": (-T, 0), "Z4": (-T, 0), "R1": (-T, T), "R2": (0, 0)}[k]
            ys = {"Z1": (0, T), "Z2": (0, T), "Z3": (-T, 0), "Z4": (-T, 0), "R1": (0, 0), "R2": (-T, T)}[k]
        del e
        return (*xs, *ys, 0.0, Q)

    def __str__(self):
        return "Z" if self.label is None else str(self.label)


@dataclass(eq=False)
class PrismRegion(Region):
    """``piece x (0, Q]`` for DeltaX, DeltaY, Slice(i) or H1 itself."""

    plan: DecompositionPlan
    label: PieceLabel

    def predicate(self, x, y, z, prec):
        from .domain import _and
        zc = _and(z.gt(0), z.le(self.plan.Q))
        if self.label.kind == "H1":
            return _and(zc, in_H1((x, y), self.plan.eps.interval(prec), self.plan.T))
        return _and(zc, in_h1_piece(self.label, (x, y), self.plan, prec))

    def bbox(self):
        if self.label.kind == "H1":
            T = float(self.plan.T)
            return 0.0, T, 0.0, T, 0.0, float(self.plan.Q)
        return (*region_bbox(self.plan, self.label), 0.0, float(self.plan.Q))

    def __str__(self):
        return str(self.label)


H1_LABEL = PieceLabel("H1")


@dataclass(eq=False)
class FlowImage(Region):
    inner: Region
    flow: FlowMap

    def predicate(self, x, y, z, prec):
        a, b, c = self.flow.coeffs(max(prec, 128))
        return self.inner.predicate(x / a, y / b, z / c, prec)

    def bbox(self):
        a, b, c = (float(v.mid) for v in self.flow.coeffs())
        x0, x1, y0, y1, z0, z1 = self.inner.bbox()
        w = 1 + 1e-9
        return x0 * a * w, x1 * a * w, y0 * b * w, y1 * b * w, z0 * c * w, z1 * c * w

    def __str__(self):
        return f"phi{self.flow.i}({self.inner})"


@dataclass(eq=False)
class TauImage(Region):
    inner: Region
    j: int

    def predicate(self, x, y, z, prec):
        sx, sy = TAU_SIGNS[self.j]
        return self.inner.predicate(x * sx, y * sy, z, prec)

    def bbox(self):
        sx, sy = TAU_SIGNS[self.j]
        x0, x1, y0, y1, z0, z1 = self.inner.bbox()
        xs = sorted((x0 * sx, x1 * sx))
        ys = sorted((y0 * sy, y1 * sy))
        return (*xs, *ys, z0, z1)


@dataclass(eq=False)
class BoxRegion(Region):
    """Closed box with rational corners."""

    lo: tuple
    hi: tuple

    def predicate(self, x, y, z, prec):
        from .domain import _and
        return _and(*(v.ge(Fraction(a)) for v, a in zip((x, y, z), self.lo)),
                    *(v.le(Fraction(b)) for v, b in zip((x, y, z), self.hi)))

    def bbox(self):
        return (float(self.lo[0]), float(self.hi[0]), float(self.lo[1]), float(self.hi[1]),
                float(self.lo[2]), float(self.hi[2]))


def slice_region(plan: DecompositionPlan, label: PieceLabel) -> Region:
    return PrismRegion(plan, label)


# ---------------------------------------------------------------------------
# counting

CHUNK = 4096


def count_in_region(basis: Basis3, region: Region, q_range: Optional[tuple[int, int]] = None,
                    max_precision: int = DEFAULT_MAX_PRECISION) -> int:
    """Exact number of lattice points in ``region``.

    Works for bases built from a pair (after sign flips and flows).  When the
    region is the image of the basis' own flow the count is taken in the
    preimage, where both are unflowed.
    """
    form = basis.form
    if form is None:
        raise NotImplementedError("counting needs a basis built from a pair")
    if isinstance(region, FlowImage) and form.flow is not None and region.flow.i == form.flow.i \
            and region.flow.plan is form.flow.plan:
        return _count_direct(replace(form, flow=None), region.inner, q_range, max_precision)
    return _count_direct(form, region, q_range, max_precision)


def _count_direct(form: PairForm, region: Region, q_range, max_precision) -> int:
    x0, x1, y0, y1, z0, z1 = region.bbox()
    sa, sb, sc = (float(v.mid) for v in form.scales(128))
    # coefficient ranges: p1 + q alpha in [x0, x1] / (sx a)
    ux = sorted((x0 / (form.sx * sa), x1 / (form.sx * sa)))
    uy = sorted((y0 / (form.sy * sb), y1 / (form.sy * sb)))
    qlo, qhi = math.floor(z0 / sc) - 1, math.ceil(z1 / sc) + 1
    if q_range is not None:
        qlo, qhi = max(qlo, q_range[0]), min(qhi, q_range[1])
    if qhi < qlo:
        return 0
    Kx = math.ceil(ux[1] - ux[0]) + 3
    Ky = math.ceil(uy[1] - uy[0]) + 3
    al_iv, be_iv = eval_real(form.alpha, 128), eval_real(form.beta, 128)
    al, be = float(al_iv.mid), float(be_iv.mid)
    aF, bF = FBox.of(al_iv), FBox.of(be_iv)
    scF = [FBox.of(v) for v in form.scales(128)]
    total = 0
    unknown = []
    kx = np.arange(Kx)
    ky = np.arange(Ky)
    for start in range(qlo, qhi + 1, CHUNK):
        q = np.arange(start, min(start + CHUNK, qhi + 1), dtype=np.int64)
        p1 = np.floor(ux[0] - q * al).astype(np.int64) - 1
        p2 = np.floor(uy[0] - q * be).astype(np.int64) - 1
        P1 = p1[:, None, None] + kx[None, :, None]
        P2 = p2[:, None, None] + ky[None, None, :]
        Qg = np.broadcast_to(q[:, None, None], (len(q), Kx, Ky))
        P1 = np.broadcast_to(P1, Qg.shape)
        P2 = np.broadcast_to(P2, Qg.shape)
        QF = FBox.of(np.ascontiguousarray(Qg))
        X = (FBox.of(np.ascontiguousarray(P1)) + QF * aF) * form.sx * scF[0]
        Y = (FBox.of(np.ascontiguousarray(P2)) + QF * bF) * form.sy * scF[1]
        Z = QF * scF[2]
        tri = region.predicate(X, Y, Z, 128)
        tri = np.broadcast_to(tri, Qg.shape)
        total += int(np.count_nonzero(tri == YES))
        for idx in zip(*np.nonzero(tri == UNKNOWN)):
            unknown.append((int(P1[idx]), int(P2[idx]), int(Qg[idx])))
    for p1, p2, q in unknown:
        if certify(lambda p: region.predicate(*form.point(p1, p2, q, max(p, 64)), p),
                   max_precision, f"lattice point {(p1, p2, q)} in {region}"):
            total += 1
    return total


def count_in_region_naive(basis: Basis3, region: Region, q_range=None, max_precision: int = DEFAULT_MAX_PRECISION) -> int:
    """Point-by-point exact count without the float prefilter (slow; for tests)."""
    form = basis.form
    x0, x1, y0, y1, z0, z1 = region.bbox()
    sa, sb, sc = (float(v.mid) for v in form.scales(128))
    ux = sorted((x0 / (form.sx * sa), x1 / (form.sx * sa)))
    uy = sorted((y0 / (form.sy * sb), y1 / (form.sy * sb)))
    qlo, qhi = math.floor(z0 / sc) - 1, math.ceil(z1 / sc) + 1
    if q_range is not None:
        qlo, qhi = max(qlo, q_range[0]), min(qhi, q_range[1])
    al, be = float(eval_real(form.alpha, 64).mid), float(eval_real(form.beta, 64).mid)
    n = 0
    for q in range(qlo, qhi + 1):
        for p1 in range(math.floor(ux[0] - q * al) - 1, math.ceil(ux[1] - q * al) + 2):
            for p2 in range(math.floor(uy[0] - q * be) - 1, math.ceil(uy[1] - q * be) + 2):
                if certify(lambda p: region.predicate(*form.point(p1, p2, q, max(p, 64)), p), max_precision):
                    n += 1
    return n


# ---------------------------------------------------------------------------
# checks

@dataclass
class DecompositionReport:
    total: int
    z_counts: list[int]
    z_via_tau: list[int]
    r1: int
    r2: int
    stated_r: int
    identity_holds: bool
    inequality_holds: bool
    tau_consistent: bool
    slack: float

    @property
    def holds(self) -> bool:
        return self.identity_holds and self.inequality_holds and self.tau_consistent


def decomposition_identity_check(pair, params: CountParams) -> DecompositionReport:
    """``|L n Z| = sum_j |L n Z_j| + |L n R1| + |L n R2|`` and the < 4(T+1) inequality."""
    L = lattice_from_pair(pair)
    eps, T, Q = params.eps, params.T, params.Q
    total = count_in_region(L, ZRegion(eps, T, Q))
    zc = [count_in_region(L, ZRegion(eps, T, Q, PieceLabel(f"Z{j}"))) for j in range(1, 5)]
    via = [count_in_region(apply_tau(j, L), ZRegion(eps, T, Q, PieceLabel("Z1"))) for j in range(1, 5)]
    r1 = count_in_region(L, ZRegion(eps, T, Q, PieceLabel("R1")))
    r2 = count_in_region(L, ZRegion(eps, T, Q, PieceLabel("R2")))
    slack = 4 * (T + 1)
    return DecompositionReport(
        total, zc, via, r1, r2, 2 * math.floor(T) + 1,
        identity_holds=total == sum(zc) + r1 + r2,
        inequality_holds=abs(total - sum(zc)) < slack,
        tau_consistent=zc == via,
        slack=float(slack),
    )


@dataclass
class SlicePartitionReport:
    j: int
    h1_count: int
    delta_x: int
    delta_y: int
    slices: dict[int, int]

    @property
    def holds(self) -> bool:
        return self.h1_count == self.delta_x + self.delta_y + sum(self.slices.values())


def slice_partition_check(pair, plan: DecompositionPlan, j: int = 1) -> SlicePartitionReport:
    """Counts in ``H1 x (0,Q]`` split exactly over DeltaX, DeltaY and the slices."""
    L = apply_tau(j, lattice_from_pair(pair))
    h1 = count_in_region(L, PrismRegion(plan, H1_LABEL))
    dx = count_in_region(L, PrismRegion(plan, DELTA_X))
    dy = count_in_region(L, PrismRegion(plan, DELTA_Y))
    sl = {i: count_in_region(L, PrismRegion(plan, Slice(i))) for i in plan.indices}
    return SlicePartitionReport(j, h1, dx, dy, sl)


@dataclass
class MinBoundReport:
    i: int
    j: int
    lambda1_lo: float
    lambda1_hi: float
    threshold: float
    holds: bool
    witness: tuple
    witness_valid: Optional[bool] = None
    lambda1_width: float = 0.0


def _threshold(T: Fraction, phiQ, prec: int = 128) -> Interval:
    return icbrt(Interval.exact(_frac(phiQ)), prec) * min(Fraction(1), 1 / (2 * T))


def minbound_check(pair, plan: DecompositionPlan, i: int, j: int, phiQ) -> MinBoundReport:
    """``lambda_1(phi_i L_j) >= min(1, 1/(2T)) phi(Q)^(1/3)``."""
    phi = _frac(phiQ)
    if not certify(lambda p: (plan.eps.interval(p) * plan.Q).ge(phi)):
        raise ConditionViolated("eps Q >= phi(Q) fails")
    b = lattice_j(pair, j, plan, i)
    lam = lambda1(b)
    thr = _threshold(plan.T, phi)
    holds = lam.length.lo >= thr.hi
    rep = MinBoundReport(i, j, float(lam.length.lo), float(lam.length.hi), float(thr.mid), holds, lam.witness,
                         lambda1_width=float(lam.length.width))
    if not holds:
        from .phi import witness_is_valid
        rep.witness_valid = witness_is_valid(pair, plan.Q, phi)
    return rep


def minbound_grid(pair, plan: DecompositionPlan, phiQ) -> list[MinBoundReport]:
    return [minbound_check(pair, plan, i, j, phiQ) for j in range(1, 5) for i in plan.indices]


@dataclass
class CountingLemmaReport:
    region: str
    count: int
    volume: float
    discrepancy: float
    bound: float
    lambda1: float
    holds: bool


def counting_lemma_check(basis: Basis3, region: Region, volume, cover,
                         lam: Optional[Lambda1Result] = None) -> CountingLemmaReport:
    """``| |L n S| - Vol S / det L | <= D3 M (1 + (L/lambda_1)^2)``."""
    if lam is None:
        lam = lambda1(basis)
    count = count_in_region(basis, region)
    vol = volume if isinstance(volume, Interval) else Interval.exact(_frac(volume))
    det = basis.abs_det if basis.abs_det is not None else abs(basis.det_interval()).lo
    disc = abs(vol / det - count)
    M = len(cover.pieces)
    Lq = Fraction(cover.lipschitz_bound)
    bound = CONSTANTS.D3 * M * (1 + (Lq / lam.length.lo) ** 2)
    return CountingLemmaReport(str(region), count, float(vol.mid), float(disc.hi), float(bound),
                               float(lam.length.mid), disc.hi <= bound)


@dataclass
class Z1DiscrepancyReport:
    count: int
    volume: float
    discrepancy: float
    bound: float
    holds: bool


def z1_discrepancy_check(pair, params: CountParams, phiQ, j: int = 1) -> Z1DiscrepancyReport:
    """``| |L_j n Z1| - Vol Z1 | <= C5 (1+2T)^2 log(T^2/eps) (eps Q/phi)^(2/3)``."""
    params.require_theorem_mode()
    eps, T, Q = params.eps, params.T, params.Q
    phi = _frac(phiQ)
    count = count_in_region(apply_tau(j, lattice_from_pair(pair)), ZRegion(eps, T, Q, PieceLabel("Z1")))
    e = eps.interval(128)
    R = params.log_ratio(128)
    vol = e * (1 + R) * Q
    x = e * Q / phi
    bound = CONSTANTS.C5 * (1 + 2 * T) ** 2 * R * icbrt(x, 128).square()
    disc = abs(vol - count)
    return Z1DiscrepancyReport(count, float(vol.mid), float(disc.hi), float(bound.lo), disc.hi <= bound.lo)
