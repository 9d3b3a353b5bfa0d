"""Pure-Python q-loop kernels; the reference for ``_kernels.pyx``.

Each irrational enters as a 64-bit fixed-point fractional mantissa ``A`` with
width ``w``: ``frac(alpha)`` lies in ``[A, A + w] * 2**-64``.  For each q the
signed residual of ``q*A mod 2**64`` gives an enclosure of ``q*alpha`` minus
its nearest integer.  Doubles are used with explicit outward slack, so every
verdict is certified; q values whose enclosures are too close to a decision
boundary are handed back to the caller for exact treatment.

The statement order here mirrors the Cython source so both backends produce
bit-identical floating-point results.
"""
import math

MASK = (1 << 64) - 1
HALF = 1 << 63
INT64_MAX = (1 << 63) - 1
TWO_M64 = 2.0 ** -64
SLACK = 2.0 ** -50
ONE_M = 1.0 - 2.0 ** -50
ONE_P = 1.0 + 2.0 ** -50
NLAYERS = 128


def _dist(F, qw):
    S = F - (1 << 64) if F >= HALF else F
    if S > INT64_MAX - qw:
        return 0, 0.0, 0.0
    rlo = float(S) * TWO_M64 - SLACK
    rhi = float(S + qw) * TWO_M64 + SLACK
    if rlo > 0.0:
        return 1, rlo, rhi
    if rhi < 0.0:
        return 1, -rhi, -rlo
    return 0, 0.0, 0.0


def _signed(F, qw):
    S = F - (1 << 64) if F >= HALF else F
    if S > INT64_MAX - qw:
        return 0, 0.0, 0.0
    return 1, float(S) * TWO_M64 - SLACK, float(S + qw) * TWO_M64 + SLACK


def count_diag_seg(A, wa, B, wb, q0, q1, eps_lo, eps_hi):
    """Count q in [q0, q1] with ||q a|| ||q b|| < eps; return (count, uncertain)."""
    F1 = (q0 * A) & MASK
    F2 = (q0 * B) & MASK
    count = 0
    unc = []
    for q in range(q0, q1 + 1):
        ok1, d1lo, d1hi = _dist(F1, q * wa)
        ok2, d2lo, d2hi = _dist(F2, q * wb)
        F1 = (F1 + A) & MASK
        F2 = (F2 + B) & MASK
        if not (ok1 and ok2):
            unc.append(q)
            continue
        plo = d1lo * d2lo * ONE_M
        phi = d1hi * d2hi * ONE_P
        if phi < eps_lo:
            count += 1
        elif plo >= eps_hi:
            pass
        else:
            unc.append(q)
    return count, unc


def _abs_iv(k, rlo, rhi):
    sl = float(abs(k) + 1) * SLACK
    xlo = (float(k) + rlo) - sl
    xhi = (float(k) + rhi) + sl
    if xlo > 0.0:
        return 1, xlo, xhi
    if xhi < 0.0:
        return 1, -xhi, -xlo
    return 0, 0.0, 0.0


def count_box_seg(A, wa, B, wb, q0, q1, T_lo, T_hi, eps_lo, eps_hi):
    """Count lattice points with |x y| < eps, |x|, |y| <= T over q in [q0, q1]."""
    F1 = (q0 * A) & MASK
    F2 = (q0 * B) & MASK
    kmax = int(T_hi) + 1
    count = 0
    unc = []
    for q in range(q0, q1 + 1):
        ok1, r1lo, r1hi = _signed(F1, q * wa)
        ok2, r2lo, r2hi = _signed(F2, q * wb)
        F1 = (F1 + A) & MASK
        F2 = (F2 + B) & MASK
        if not (ok1 and ok2):
            unc.append(q)
            continue
        cq = 0
        bad = False
        for k in range(-kmax, kmax + 1):
            okx, axlo, axhi = _abs_iv(k, r1lo, r1hi)
            if not okx:
                bad = True
                break
            if axhi <= T_lo:
                c1 = 1
            elif axlo > T_hi:
                continue
            else:
                c1 = 2
            for m in range(-kmax, kmax + 1):
                oky, aylo, ayhi = _abs_iv(m, r2lo, r2hi)
                if not oky:
                    bad = True
                    break
                if ayhi <= T_lo:
                    c2 = 1
                elif aylo > T_hi:
                    continue
                else:
                    c2 = 2
                if axhi * ayhi * ONE_P < eps_lo:
                    c3 = 1
                elif axlo * aylo * ONE_M >= eps_hi:
                    continue
                else:
                    c3 = 2
                if c1 == 1 and c2 == 1 and c3 == 1:
                    cq += 1
                else:
                    bad = True
                    break
            if bad:
                break
        if bad:
            unc.append(q)
        else:
            count += cq
    return count, unc


def recsum_seg(A, wa, B, wb, q0, q1):
    """Sum enclosures of 1/(||q a|| ||q b||) and dyadic layer histogram.

    Returns ``(s_lo, s_hi, n, layers, uncertain)``; the sums are raw
    recursive float sums and still need the summation-error factor.
    """
    F1 = (q0 * A) & MASK
    F2 = (q0 * B) & MASK
    s_lo = 0.0
    s_hi = 0.0
    n = 0
    layers = [0] * NLAYERS
    unc = []
    for q in range(q0, q1 + 1):
        ok1, d1lo, d1hi = _dist(F1, q * wa)
        ok2, d2lo, d2hi = _dist(F2, q * wb)
        F1 = (F1 + A) & MASK
        F2 = (F2 + B) & MASK
        if not (ok1 and ok2):
            unc.append(q)
            continue
        plo = d1lo * d2lo * ONE_M
        phi = d1hi * d2hi * ONE_P
        e_lo = math.frexp(plo)[1]
        e_hi = math.frexp(phi)[1]
        if e_lo != e_hi or -e_lo >= NLAYERS or -e_lo < 0:
            unc.append(q)
            continue
        layers[-e_lo] += 1
        s_lo += ONE_M / phi
        s_hi += ONE_P / plo
        n += 1
    return s_lo, s_hi, n, layers, unc


def phi_seg(A, wa, B, wb, q0, q1, stride, qmax, rmin_lo, rmin_hi):
    """Scan q*||q a||*||q b|| with running minima.

    Stops at the first q whose enclosure is not usable and returns it as
    ``q_stop`` (``q1 + 1`` when the segment completed).
    """
    F1 = (q0 * A) & MASK
    F2 = (q0 * B) & MASK
    rq, rlo, rhi, rmlo, rmhi = [], [], [], [], []
    q_stop = q1 + 1
    for q in range(q0, q1 + 1):
        ok1, d1lo, d1hi = _dist(F1, q * wa)
        ok2, d2lo, d2hi = _dist(F2, q * wb)
        F1 = (F1 + A) & MASK
        F2 = (F2 + B) & MASK
        if not (ok1 and ok2):
            q_stop = q
            break
        vlo = float(q) * d1lo * d2lo * ONE_M
        vhi = float(q) * d1hi * d2hi * ONE_P
        new_min = vlo < rmin_lo
        if vlo < rmin_lo:
            rmin_lo = vlo
        if vhi < rmin_hi:
            rmin_hi = vhi
        if new_min or q == 1 or q % stride == 0 or q == qmax:
            rq.append(q)
            rlo.append(vlo)
            rhi.append(vhi)
            rmlo.append(rmin_lo)
            rmhi.append(rmin_hi)
    return rq, rlo, rhi, rmlo, rmhi, q_stop, rmin_lo, rmin_hi
