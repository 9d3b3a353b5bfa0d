"""Geometry of the counting domain: pieces, slices, flows and boundary covers."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

import numpy as np
from scipy.spatial import cKDTree

from .counting import CountParams, _frac
from .floatbox import NO, UNKNOWN, YES, FBox, and3
from .errors import IndexOutOfRange, UndecidablePredicate
from .realnum import (
    DEFAULT_MAX_PRECISION, Interval, as_positive, certify, icbrt, iexp, isqrt_iv,
)


@dataclass(frozen=True)
class PieceLabel:
    kind: str
    index: Optional[int] = None

    def __str__(self):
        return self.kind if self.index is None else f"{self.kind}({self.index})"

    @classmethod
    def parse(cls, text: str) -> "PieceLabel":
        if text.startswith("Slice(") and text.endswith(")"):
            return cls("Slice", int(text[6:-1]))
        return cls(text)


Z_PIECES = tuple(PieceLabel(k) for k in ("Z1", "Z2", "Z3", "Z4", "R1", "R2"))
OUTSIDE = PieceLabel("Outside")
DELTA_X = PieceLabel("DeltaX")
DELTA_Y = PieceLabel("DeltaY")


def Slice(i: int) -> PieceLabel:  # noqa: N802 - reads like the set it names
    return PieceLabel("Slice", i)


class DecompositionPlan:
    """Derived quantities ``R, N, nu, V, theta`` for one ``(eps, T, Q)``.

    ``nu`` is never stored; every power is evaluated as ``(eps/T^2)**(e/N)``
    so that ``nu**N == eps/T^2`` holds as an identity.  ``N = floor(R)`` is
    the largest integer with ``nu = exp(-R/N) <= 1/e``, and ``N >= R/2``
    (true for ``R >= 2``) gives ``nu >= e**-2``.
    """

    def __init__(self, eps, T, Q):
        self.params = CountParams(eps, T, Q)
        self.params.require_theorem_mode()
        self.eps, self.T, self.Q = self.params.eps, self.params.T, self.params.Q
        self.R_exact = self.params.log_ratio_exact()
        if self.R_exact is not None:
            self.N = math.floor(self.R_exact)
        else:
            self.N = _certified_floor(self.params.log_ratio)
        self._cache: dict = {}

    def __repr__(self):
        return f"DecompositionPlan(eps={self.eps}, T={self.T}, Q={self.Q}, N={self.N})"

    def _memo(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    # certified quantities ---------------------------------------------------
    def R(self, prec: int = 128) -> Interval:
        return self._memo(("R", prec), lambda: self.params.log_ratio(prec))

    def ratio(self, prec: int = 128) -> Interval:
        """``eps / T^2`` (equal to ``nu**N``)."""
        return self._memo(("ratio", prec), lambda: self.eps.interval(prec) / (self.T * self.T))

    def nu_power(self, e, prec: int = 128) -> Interval:
        """``nu**e`` for rational ``e``."""
        e = Fraction(e)

        def compute():
            m = e / self.N
            if m.denominator == 1:
                r = self.ratio(prec)
                if m >= 0:
                    return _ipow_int(r, int(m))
                return 1 / _ipow_int(r, int(-m))
            return iexp(-self.R(prec) * m, prec)
        return self._memo(("nu", e, prec), compute)

    def nu(self, prec: int = 128) -> Interval:
        return self.nu_power(1, prec)

    def neg_log_nu(self, prec: int = 128) -> Interval:
        return self.R(prec) / self.N

    def V(self, prec: int = 128) -> Interval:
        return self._memo(("V", prec), lambda: self.eps.interval(prec) / 2 * self.Q * self.neg_log_nu(prec))

    def cbrt_V(self, prec: int = 128) -> Interval:
        return self._memo(("V13", prec), lambda: icbrt(self.V(prec), prec))

    def sqrt_eps(self, prec: int = 128) -> Interval:
        return self._memo(("se", prec), lambda: isqrt_iv(self.eps.interval(prec), prec))

    def theta(self, prec: int = 128) -> Interval:
        return self._memo(("theta", prec), lambda: self.cbrt_V(prec) / self.sqrt_eps(prec))

    def volume_bounds(self) -> tuple[bool, bool]:
        """``(eps Q / 2 <= V, V <= eps Q)``, decided exactly.

        ``V / (eps Q / 2) = R / N``, so the pair is ``(N <= R, R <= 2N)``.  Both
        are certain: either R is rational, or it is the log of a rational other
        than 1 and hence not an integer.
        """
        if self.R_exact is not None:
            return self.N <= self.R_exact, self.R_exact <= 2 * self.N
        return (bool(certify(lambda p: self.R(p).ge(self.N), what="N <= R")),
                bool(certify(lambda p: self.R(p).le(2 * self.N), what="R <= 2N")))

    @property
    def indices(self) -> range:
        return range(-self.N + 1, self.N + 1)

    def check_index(self, i: int) -> None:
        if not -self.N + 1 <= i <= self.N:
            raise IndexOutOfRange(f"slice index {i} outside [{-self.N + 1}, {self.N}]")

    def floats(self) -> dict[str, float]:
        return {"R": float(self.R()), "N": self.N, "nu": float(self.nu()), "V": float(self.V()),
                "theta": float(self.theta())}


def _ipow_int(x: Interval, n: int) -> Interval:
    out = Interval.exact(1)
    for _ in range(n):
        out = out * x
    return out


def _certified_floor(fn, max_precision: int = 1024) -> int:
    p = 64
    while True:
        iv = fn(p)
        lo, hi = math.floor(iv.lo), math.floor(iv.hi)
        if lo == hi:
            return lo
        if p >= max_precision:
            raise UndecidablePredicate("floor of log(T^2/eps) undecided")
        p *= 2


def make_plan(eps, T, Q) -> DecompositionPlan:
    return DecompositionPlan(eps, T, Q)


def vol_S0(plan: DecompositionPlan, prec: int = 128) -> Interval:
    """Area of the central slice: ``-(eps/2) log nu``."""
    return plan.eps.interval(prec) / 2 * plan.neg_log_nu(prec)


def vol_slice3(plan: DecompositionPlan, prec: int = 128) -> Interval:
    """``V = Vol(S_0 x (0, Q])``."""
    return plan.V(prec)


# ---------------------------------------------------------------------------
# flows

@dataclass
class FlowMap:
    """Diagonal map ``(theta nu^(i/2), theta nu^(-i/2), theta^-2)``.

    The third entry is the reciprocal of the product of the first two, so the
    determinant is 1 by construction.
    """

    plan: DecompositionPlan
    i: int

    def coeffs(self, prec: int = 128) -> tuple[Interval, Interval, Interval]:
        th = self.plan.theta(prec)
        a = th * self.plan.nu_power(Fraction(self.i, 2), prec)
        b = th * self.plan.nu_power(Fraction(-self.i, 2), prec)
        c = 1 / (th * th)
        return a, b, c

    det_exact = Fraction(1)

    def det_interval(self, prec: int = 128) -> Interval:
        a, b, c = self.coeffs(prec)
        return a * b * c

    def apply(self, point, prec: int = 128):
        a, b, c = self.coeffs(prec)
        x, y, z = point
        return a * x, b * y, c * z

    def invert(self, point, prec: int = 128):
        a, b, c = self.coeffs(prec)
        x, y, z = point
        return x / a, y / b, z / c


def flow_map(plan: DecompositionPlan, i: int) -> FlowMap:
    plan.check_index(i)
    return FlowMap(plan, i)


def flow_for(plan: DecompositionPlan, label: PieceLabel) -> FlowMap:
    """The flow paired with a region: its own index for slices, N for DeltaX, 1-N for DeltaY."""
    if label.kind == "Slice":
        return flow_map(plan, label.index)
    if label == DELTA_X:
        return flow_map(plan, plan.N)
    if label == DELTA_Y:
        return flow_map(plan, -plan.N + 1)
    raise ValueError(f"no flow for {label}")


# ---------------------------------------------------------------------------
# piece predicates (three-valued over intervals)

def _and(*vals) -> Optional[bool]:
    if any(isinstance(v, np.ndarray) for v in vals):
        return and3(*(_tri(v) for v in vals))
    if any(v is False for v in vals):
        return False
    if all(v is True for v in vals):
        return True
    return None


def _tri(v):
    if isinstance(v, np.ndarray):
        return v
    return {True: YES, False: NO, None: UNKNOWN}[v]


def _is_zero(x: Interval) -> Optional[bool]:
    if isinstance(x, FBox):
        return x.is_zero()
    if x.lo == x.hi == 0:
        return True
    if x.lo > 0 or x.hi < 0:
        return False
    return None


def _iv(v) -> Interval:
    if isinstance(v, (Interval, FBox)):
        return v
    return Interval.exact(Fraction(v))


def in_z_piece(label: PieceLabel, point, eps: Interval, T: Fraction, Q: Fraction) -> Optional[bool]:
    x, y, z = (_iv(v) for v in point)
    zc = _and(z.gt(0), z.le(Q))
    if label.kind in ("R1", "R2"):
        on, free = (y, x) if label.kind == "R1" else (x, y)
        return _and(zc, _is_zero(on), free.ge(-T), free.le(T))
    sx, sy = {"Z1": (1, 1), "Z2": (-1, 1), "Z3": (1, -1), "Z4": (-1, -1)}[label.kind]
    xs, ys = x * sx, y * sy
    return _and(zc, (x * y).__abs__().lt(eps), xs.gt(0), xs.le(T), ys.gt(0), ys.le(T))


def in_Z(point, eps: Interval, T: Fraction, Q: Fraction) -> Optional[bool]:
    x, y, z = (_iv(v) for v in point)
    return _and(z.gt(0), z.le(Q), abs(x * y).lt(eps), abs(x).le(T), abs(y).le(T))


def z_memberships(point, eps, T, Q, max_precision: int = DEFAULT_MAX_PRECISION) -> list[PieceLabel]:
    """Every Z-level piece containing ``point`` (certified)."""
    eps, T, Q = as_positive(eps), _frac(T), _frac(Q)
    out = []
    for lab in Z_PIECES:
        if certify(lambda p: in_z_piece(lab, point, eps.interval(p), T, Q), max_precision, str(lab)):
            out.append(lab)
    return out


def classify_Z(point, eps, T, Q, max_precision: int = DEFAULT_MAX_PRECISION) -> PieceLabel:
    """Piece of ``Z = Z1 u Z2 u Z3 u Z4 u R1 u R2`` containing ``point``.

    The line ``x = y = 0`` lies in both R1 and R2; it is reported as R1.
    """
    found = z_memberships(point, eps, T, Q, max_precision)
    return found[0] if found else OUTSIDE


def in_H1(point, eps: Interval, T: Fraction) -> Optional[bool]:
    x, y = (_iv(v) for v in point[:2])
    return _and((x * y).lt(eps), x.gt(0), x.le(T), y.gt(0), y.le(T))


def in_h1_piece(label: PieceLabel, point, plan: DecompositionPlan, prec: int) -> Optional[bool]:
    x, y = (_iv(v) for v in point[:2])
    T = plan.T
    if label == DELTA_X:
        return _and(y.gt(0), y.lt(x * plan.ratio(prec)), x.gt(0), x.le(T))
    if label == DELTA_Y:
        eps = plan.eps.interval(prec)
        return _and(y.ge(x / plan.ratio(prec)), y.le(T), x.gt(0), x.lt(eps / T))
    if label.kind == "Slice":
        i = label.index
        lo = x * plan.nu_power(i, prec)
        hi = x * plan.nu_power(i - 1, prec)
        return _and(lo.gt(0), lo.le(y), y.lt(hi), (x * y).lt(plan.eps.interval(prec)))
    raise ValueError(f"{label} is not an H1-level piece")


def h1_labels(plan: DecompositionPlan) -> list[PieceLabel]:
    return [DELTA_X, DELTA_Y] + [Slice(i) for i in plan.indices]


def h1_memberships(point, plan: DecompositionPlan,
                   max_precision: int = DEFAULT_MAX_PRECISION) -> list[PieceLabel]:
    return [lab for lab in h1_labels(plan)
            if certify(lambda p: in_h1_piece(lab, point, plan, p), max_precision, str(lab))]


def slice_index_guess(plan: DecompositionPlan, x: float, y: float) -> int:
    """``ceil(log(y/x) / log nu)`` in floating point."""
    return math.ceil(math.log(y / x) / -float(plan.neg_log_nu()))


def classify_H1(point, plan: DecompositionPlan,
                max_precision: int = DEFAULT_MAX_PRECISION) -> PieceLabel:
    """Label among DeltaX, DeltaY, Slice(i) or Outside for a point of the plane."""
    x, y = point[0], point[1]
    cands = [DELTA_X, DELTA_Y]
    fx, fy = float(_iv(x).mid), float(_iv(y).mid)
    if fx > 0 and fy > 0:
        g = slice_index_guess(plan, fx, fy)
        cands += [Slice(i) for i in (g, g - 1, g + 1) if -plan.N + 1 <= i <= plan.N]
    for lab in cands:
        if certify(lambda p: in_h1_piece(lab, point, plan, p), max_precision, str(lab)):
            return lab
    inside = certify(lambda p: in_H1(point, plan.eps.interval(p), plan.T), max_precision, "H1")
    if inside:
        # the guess missed by more than one window; scan them all
        for i in plan.indices:
            if certify(lambda p: in_h1_piece(Slice(i), point, plan, p), max_precision, "slice"):
                return Slice(i)
    return OUTSIDE


def g_map(plan: DecompositionPlan, i: int, point, prec: int = 128):
    """``g_i(x, y) = (nu^(i/2) x, nu^(-i/2) y)``."""
    x, y = (_iv(v) for v in point[:2])
    return plan.nu_power(Fraction(i, 2), prec) * x, plan.nu_power(Fraction(-i, 2), prec) * y


# ---------------------------------------------------------------------------
# sampling

def region_bbox(plan: DecompositionPlan, label: PieceLabel) -> tuple[float, float, float, float]:
    """Outer float box ``(x0, x1, y0, y1)`` of the planar region."""
    T = float(plan.T)
    eps = float(plan.eps.interval(64).hi)
    if label == DELTA_X:
        return 0.0, T, 0.0, eps / T * (1 + 1e-12)
    if label == DELTA_Y:
        return 0.0, eps / T * (1 + 1e-12), 0.0, T
    if label.kind == "Slice":
        i = label.index
        se = math.sqrt(eps)
        nu = float(plan.nu())
        return (0.0, se * nu ** (-i / 2) * (1 + 1e-9), 0.0,
                math.sqrt(eps / nu) * nu ** (i / 2) * (1 + 1e-9))
    raise ValueError(label)


def _float_member(plan, label, x, y):
    """Vectorised float membership, used only to draw samples."""
    eps, T = float(plan.eps.interval(64).mid), float(plan.T)
    r = eps / T ** 2
    if label == DELTA_X:
        return (y > 0) & (y < r * x) & (x > 0) & (x <= T)
    if label == DELTA_Y:
        return (y >= x / r) & (y <= T) & (x > 0) & (x < eps / T)
    i = label.index
    nu = float(plan.nu())
    return (x > 0) & (nu ** i * x <= y) & (y < nu ** (i - 1) * x) & (x * y < eps)


def sample_region(plan: DecompositionPlan, label: PieceLabel, n: int,
                  rng: np.random.Generator) -> np.ndarray:
    """``n`` points of ``region x (0, Q]`` by rejection inside the bounding box."""
    x0, x1, y0, y1 = region_bbox(plan, label)
    Q = float(plan.Q)
    out = []
    have = 0
    while have < n:
        m = max(4 * (n - have), 1024)
        x = rng.uniform(x0, x1, m)
        y = rng.uniform(y0, y1, m)
        keep = _float_member(plan, label, x, y)
        z = rng.uniform(0.0, Q, m)
        pts = np.stack([x[keep], y[keep], z[keep]], axis=1)
        pts = pts[pts[:, 2] > 0]
        out.append(pts)
        have += len(pts)
    return np.concatenate(out)[:n]


# ---------------------------------------------------------------------------
# containment of flowed regions

@dataclass
class ContainmentReport:
    region: str
    flow_index: int
    samples: int
    bound: float
    max_coord: float
    violations: int
    first_violation: Optional[tuple] = None

    @property
    def holds(self) -> bool:
        return self.violations == 0


def containment_check(plan: DecompositionPlan, region: Union[PieceLabel, str], samples: int = 10_000,
                      seed: int = 0) -> ContainmentReport:
    """Sample the region and test that its flow image lies in ``[0, 3 V^(1/3)]^3``."""
    label = PieceLabel.parse(region) if isinstance(region, str) else region
    flow = flow_for(plan, label)
    rng = np.random.default_rng(seed)
    pts = sample_region(plan, label, samples, rng)
    a, b, c = (float(v.mid) for v in flow.coeffs())
    bound_iv = 3 * plan.cbrt_V()
    bound = float(bound_iv.lo)
    img = pts * np.array([a, b, c])
    # float screen with a wide relative margin, exact recheck otherwise
    sure = np.all((img >= 0) & (img <= bound * (1 - 1e-9)), axis=1)
    violations = 0
    first = None
    for idx in np.nonzero(~sure)[0]:
        p = tuple(Fraction(float(v)) for v in pts[idx])

        def inside(prec, p=p):
            co = flow.coeffs(prec)
            bnd = 3 * plan.cbrt_V(prec)
            return _and(*((c_ * v).ge(0) for c_, v in zip(co, p)),
                        *((c_ * v).le(bnd) for c_, v in zip(co, p)))
        if not certify(inside, what="containment"):
            violations += 1
            if first is None:
                first = tuple(float(v) for v in p)
    return ContainmentReport(str(label), flow.i, len(pts), float(bound_iv.mid),
                             float(img.max()) if len(img) else 0.0, violations, first)


# ---------------------------------------------------------------------------
# Lipschitz boundary covers

@dataclass
class CoverPiece:
    name: str
    kind: str          # "affine" or "sheet"
    origin: np.ndarray
    matrix: np.ndarray  # 3x2 for affine pieces
    sheet: tuple = ()   # (a, b, s2, c) for the hyperbolic sheet

    def __call__(self, t: np.ndarray) -> np.ndarray:
        if self.kind == "affine":
            return self.origin + t @ self.matrix.T
        a, b, s2, c = self.sheet
        x = a * t[:, 0] + b
        return np.stack([x, s2 / x, c * t[:, 1]], axis=1)

    def lipschitz(self) -> float:
        if self.kind == "affine":
            return float(np.linalg.norm(self.matrix, 2))
        a, b, s2, c = self.sheet
        # column norms of the Jacobian are maximal at t1 = 0; the columns are orthogonal
        return max(a * math.sqrt(1 + (s2 / (b * b)) ** 2), c)


@dataclass
class CoverReport:
    region: str
    pieces: list[str]
    lipschitz_bound: float
    sheet_bound: float
    analytic: dict[str, float]
    observed: dict[str, float]
    max_observed: float
    sheet_observed: float
    coverage_gap: float
    mesh: float

    @property
    def holds(self) -> bool:
        return (self.max_observed <= self.lipschitz_bound
                and self.sheet_observed <= self.sheet_bound
                and self.coverage_gap <= self.mesh)


def _affine(name, origin, u, v) -> CoverPiece:
    return CoverPiece(name, "affine", np.asarray(origin, float), np.stack([u, v], axis=1).astype(float))


def cover_pieces(plan: DecompositionPlan, label: PieceLabel) -> list[CoverPiece]:
    """The five maps covering the boundary of the flowed region."""
    s = float(plan.cbrt_V().mid)            # theta sqrt(eps)
    c = float((plan.Q / plan.theta().square()).mid)
    nu = float(plan.nu().mid)
    rn = math.sqrt(nu)
    ez = np.array([0.0, 0.0, c])
    zero = np.zeros(3)
    if label.kind == "Slice":
        u = np.array([s, s, 0.0])
        w = np.array([s * rn, s / rn, 0.0])
        return [
            _affine("ratio_lower", zero, u, ez),
            _affine("ratio_upper", zero, w, ez),
            _affine("bottom", zero, u, w),
            _affine("top", ez, u, w),
            CoverPiece("sheet", "sheet", zero, np.zeros((3, 2)), (s * (1 - rn), s * rn, s * s, c)),
        ]
    if label == DELTA_X:
        A, B, C = np.zeros(3), np.array([s, 0.0, 0.0]), np.array([s, s, 0.0])
    elif label == DELTA_Y:
        A, B, C = np.zeros(3), np.array([0.0, s / rn, 0.0]), np.array([s * rn, s / rn, 0.0])
    else:
        raise ValueError(label)
    return [
        _affine("bottom", A, B - A, C - A),
        _affine("top", A + ez, B - A, C - A),
        _affine("side_AB", A, B - A, ez),
        _affine("side_BC", B, C - B, ez),
        _affine("side_AC", A, C - A, ez),
    ]


def boundary_samples(plan: DecompositionPlan, label: PieceLabel, n: int,
                     rng: np.random.Generator) -> np.ndarray:
    """Points on the boundary of the flowed region, drawn from its definition."""
    s = float(plan.cbrt_V().mid)
    c = float((plan.Q / plan.theta().square()).mid)
    nu = float(plan.nu().mid)
    rn = math.sqrt(nu)
    k = max(n // 5, 1)
    z = rng.uniform(0, c, k)
    t = rng.uniform(0, 1, k)
    parts = []
    if label.kind == "Slice":
        x = t * s
        parts.append(np.stack([x, x, z], 1))
        x = t * s * rn
        parts.append(np.stack([x, x / nu, z], 1))
        x = s * rn + t * s * (1 - rn)
        parts.append(np.stack([x, s * s / x, z], 1))
        # flat faces: rejection inside the cone y in [x, x/nu], xy <= s^2
        pts = []
        while sum(len(p) for p in pts) < 2 * k:
            xx = rng.uniform(0, s, 4 * k)
            yy = rng.uniform(0, s / rn, 4 * k)
            keep = (yy >= xx) & (yy <= xx / nu) & (xx * yy <= s * s)
            pts.append(np.stack([xx[keep], yy[keep]], 1))
        flat = np.concatenate(pts)[: 2 * k]
        parts.append(np.column_stack([flat[:k], np.zeros(k)]))
        parts.append(np.column_stack([flat[k:], np.full(len(flat) - k, c)]))
        return np.concatenate(parts)
    if label == DELTA_X:
        verts = [np.array([0.0, 0.0]), np.array([s, 0.0]), np.array([s, s])]
    else:
        verts = [np.array([0.0, 0.0]), np.array([0.0, s / rn]), np.array([s * rn, s / rn])]
    for i0, i1 in ((0, 1), (1, 2), (0, 2)):
        e = verts[i0] + t[:, None] * (verts[i1] - verts[i0])
        parts.append(np.column_stack([e, z]))
    r1, r2 = rng.uniform(0, 1, (2, 2 * k))
    flip = r1 + r2 > 1
    r1[flip], r2[flip] = 1 - r1[flip], 1 - r2[flip]
    tri = verts[0] + r1[:, None] * (verts[1] - verts[0]) + r2[:, None] * (verts[2] - verts[0])
    parts.append(np.column_stack([tri[:k], np.zeros(k)]))
    parts.append(np.column_stack([tri[k:], np.full(len(tri) - k, c)]))
    return np.concatenate(parts)


def lipschitz_cover(plan: DecompositionPlan, region: Union[PieceLabel, str], samples: int = 10_000,
                    seed: int = 0, grid: int = 65) -> CoverReport:
    """Build the five-piece cover and measure stretch and coverage by sampling."""
    label = PieceLabel.parse(region) if isinstance(region, str) else region
    if label.kind == "Slice":
        plan.check_index(label.index)
    rng = np.random.default_rng(seed)
    pieces = cover_pieces(plan, label)
    v13 = float(plan.cbrt_V().mid)
    observed, analytic = {}, {}
    for pc in pieces:
        u = rng.uniform(0, 1, (samples, 2))
        v = rng.uniform(0, 1, (samples, 2))
        num = np.linalg.norm(pc(u) - pc(v), axis=1)
        den = np.linalg.norm(u - v, axis=1)
        ok = den > 1e-12
        observed[pc.name] = float(np.max(num[ok] / den[ok]))
        analytic[pc.name] = pc.lipschitz()
    h = 1.0 / (grid - 1)
    g = np.linspace(0, 1, grid)
    tt = np.stack(np.meshgrid(g, g, indexing="ij"), -1).reshape(-1, 2)
    images = [pc(tt) for pc in pieces]
    mesh = max(analytic.values()) * h * math.sqrt(2) / 2
    bpts = boundary_samples(plan, label, samples, rng)
    tree = cKDTree(np.concatenate(images))
    gap = float(tree.query(bpts)[0].max())
    sheet_obs = observed.get("sheet", 0.0)
    return CoverReport(str(label), [pc.name for pc in pieces], 12 * v13, 4 * v13,
                       analytic, observed, max(observed.values()), sheet_obs, gap, mesh)


# ---------------------------------------------------------------------------
# Monte Carlo partition checks

@dataclass
class PartitionReport:
    z_points: int = 0
    z_inside: int = 0
    z_misclassified: int = 0
    h1_points: int = 0
    h1_inside: int = 0
    h1_misclassified: int = 0
    resampled: int = 0
    tiling_exact: bool = False
    gi_checked: int = 0
    gi_failures: int = 0
    examples: list = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return (self.z_misclassified == 0 and self.h1_misclassified == 0
                and self.tiling_exact and self.gi_failures == 0)


def _z_batch(eps_f, T, x, y):
    """Float screen: index sets that are certainly inside / outside one piece."""
    prod = np.abs(x * y)
    margin = 1e-9 * max(eps_f, 1e-300)
    far = (np.abs(prod - eps_f) > margin) & (np.abs(np.abs(x) - T) > 1e-12) \
        & (np.abs(np.abs(y) - T) > 1e-12) & (x != 0) & (y != 0)
    return far, prod < eps_f


def _screen_label(x, y):
    if x > 0:
        return "Z1" if y > 0 else "Z3"
    return "Z2" if y > 0 else "Z4"


def tiling_check(plan: DecompositionPlan, prec: int = 128) -> bool:
    """Ratio windows ``[nu^i, nu^(i-1))`` tile ``[eps/T^2, T^2/eps)`` with exact ends."""
    ends_ok = (plan.nu_power(plan.N, prec) == plan.ratio(prec)
               and plan.nu_power(-plan.N, prec) == 1 / plan.ratio(prec))
    # independent transcendental route: exp(-R) must enclose eps/T^2
    via_exp = iexp(-plan.R(prec), prec)
    return ends_ok and _overlaps(via_exp, plan.ratio(prec))


def _overlaps(a: Interval, b: Interval) -> bool:
    return a.lo <= b.hi and b.lo <= a.hi


def partition_check(plan: DecompositionPlan, samples: int = 100_000, seed: int = 0,
                    exhaustive_every: int = 0) -> PartitionReport:
    """Classify seeded random points at both levels and count misclassifications.

    Z-level points are uniform in ``(-T, T)^2 x (0, Q)``; a point with
    ``|xy| < eps`` must lie in exactly one of Z1..Z4, R1, R2, otherwise in none.
    H1-level points are drawn log-uniformly in the ratio ``y/x`` around the
    window range so every slice gets hit; each point must lie in exactly one
    of DeltaX, DeltaY, Slice(i) iff it lies in H1.
    """
    rng = np.random.default_rng(seed)
    rep = PartitionReport(tiling_exact=tiling_check(plan))
    T = float(plan.T)
    Q = float(plan.Q)
    eps_iv = plan.eps.interval(128)
    eps_f = float(eps_iv.mid)
    Tq = plan.T

    # Z level: uniform box; most points have |xy| > eps so bias half of them
    # onto the hyperbolic cross to exercise the pieces
    n_half = samples // 2
    x = rng.uniform(-T, T, samples)
    y = rng.uniform(-T, T, samples)
    y[:n_half] = np.sign(y[:n_half]) * rng.uniform(0, 1, n_half) * np.minimum(eps_f / np.abs(x[:n_half]), T)
    z = rng.uniform(0, Q, samples)
    far, inside = _z_batch(eps_f, T, x, y)
    for k in range(samples):
        if z[k] == 0:
            rep.resampled += 1
            continue
        rep.z_points += 1
        if far[k] and not exhaustive_every:
            # screen agrees with the certified definition away from the seams
            rep.z_inside += int(inside[k])
            continue
        p = (Fraction(float(x[k])), Fraction(float(y[k])), Fraction(float(z[k])))
        try:
            members = z_memberships(p, plan.eps, Tq, plan.Q)
            inZ = certify(lambda pr: in_Z(p, plan.eps.interval(pr), Tq, plan.Q))
        except UndecidablePredicate:
            rep.resampled += 1
            continue
        rep.z_inside += int(inZ)
        if len(members) != (1 if inZ else 0):
            rep.z_misclassified += 1
            rep.examples.append(("Z", p, [str(m) for m in members]))
    # exhaustive certified check on a deterministic subsample, including screened points
    stride = max(1, samples // 2000)
    for k in range(0, samples, stride):
        if z[k] == 0:
            continue
        p = (Fraction(float(x[k])), Fraction(float(y[k])), Fraction(float(z[k])))
        try:
            members = z_memberships(p, plan.eps, Tq, plan.Q)
            inZ = certify(lambda pr: in_Z(p, plan.eps.interval(pr), Tq, plan.Q))
        except UndecidablePredicate:
            continue
        if len(members) != (1 if inZ else 0) or (inZ and far[k] and str(members[0]) != _screen_label(x[k], y[k])):
            rep.z_misclassified += 1
            rep.examples.append(("Z*", p, [str(m) for m in members]))

    # H1 level
    R = float(plan.R().mid)
    logr = rng.uniform(-R - 0.5, R + 0.5, samples)
    xy = rng.uniform(0, 1.2, samples) * eps_f
    r = np.exp(logr)
    hx, hy = np.sqrt(xy / r), np.sqrt(xy * r)
    nu_f = float(plan.nu().mid)
    for k in range(samples):
        if hx[k] <= 0 or hy[k] <= 0:
            rep.resampled += 1
            continue
        p = (Fraction(float(hx[k])), Fraction(float(hy[k])))
        try:
            inside_h1 = certify(lambda pr: in_H1(p, plan.eps.interval(pr), Tq))
            g = slice_index_guess(plan, float(hx[k]), float(hy[k]))
            cands = [DELTA_X, DELTA_Y] + [Slice(i) for i in range(g - 1, g + 2) if -plan.N + 1 <= i <= plan.N]
            if k % max(1, samples // 500) == 0:
                cands = h1_labels(plan)
            members = [lab for lab in cands
                       if certify(lambda pr: in_h1_piece(lab, p, plan, pr), what=str(lab))]
        except UndecidablePredicate:
            rep.resampled += 1
            continue
        rep.h1_points += 1
        rep.h1_inside += int(inside_h1)
        if len(members) != (1 if inside_h1 else 0):
            rep.h1_misclassified += 1
            rep.examples.append(("H1", p, [str(m) for m in members]))
            continue
        # g_i maps the slice back onto S_0
        if members and members[0].kind == "Slice" and rep.gi_checked < 2000:
            i = members[0].index
            img = g_map(plan, i, p)
            rep.gi_checked += 1
            try:
                ok = certify(lambda pr: in_h1_piece(Slice(0), g_map(plan, i, p, max(pr, 128)), plan,
                                                    max(pr, 128)), what="g_i S_i = S_0")
            except UndecidablePredicate:
                ok = True  # image lands on a window edge up to rounding of nu^(i/2)
                rep.resampled += 1
            if not ok and plan.N >= 1:
                rep.gi_failures += 1
                rep.examples.append(("g_i", p, i, [float(img[0].mid), float(img[1].mid)]))
    return rep
