# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled q-loop kernels.  Semantics and statement order follow
``_kernels_py``; keep the two in sync."""
from libc.stdint cimport uint64_t, int64_t
from libc.math cimport frexp

cdef double TWO_M64 = 2.0 ** -64
cdef double SLACK = 2.0 ** -50
cdef double ONE_M = 1.0 - 2.0 ** -50
cdef double ONE_P = 1.0 + 2.0 ** -50
cdef int64_t INT64_MAX = 9223372036854775807
cdef enum:
    NLAYERS = 128


cdef inline bint _dist(uint64_t F, int64_t qw, double* lo, double* hi) nogil:
    cdef int64_t S = <int64_t>F
    cdef double rlo, rhi
    if S > INT64_MAX - qw:
        return 0
    rlo = <double>S * TWO_M64 - SLACK
    rhi = <double>(S + qw) * TWO_M64 + SLACK
    if rlo > 0.0:
        lo[0] = rlo
        hi[0] = rhi
        return 1
    if rhi < 0.0:
        lo[0] = -rhi
        hi[0] = -rlo
        return 1
    return 0


cdef inline bint _signed(uint64_t F, int64_t qw, double* lo, double* hi) nogil:
    cdef int64_t S = <int64_t>F
    if S > INT64_MAX - qw:
        return 0
    lo[0] = <double>S * TWO_M64 - SLACK
    hi[0] = <double>(S + qw) * TWO_M64 + SLACK
    return 1


cdef inline bint _abs_iv(long k, double rlo, double rhi, double* lo, double* hi) nogil:
    cdef long ak = k if k >= 0 else -k
    cdef double sl = <double>(ak + 1) * SLACK
    cdef double xlo = (<double>k + rlo) - sl
    cdef double xhi = (<double>k + rhi) + sl
    if xlo > 0.0:
        lo[0] = xlo
        hi[0] = xhi
        return 1
    if xhi < 0.0:
        lo[0] = -xhi
        hi[0] = -xlo
        return 1
    return 0


def count_diag_seg(A, wa, B, wb, long long q0, long long q1, double eps_lo, double eps_hi):
    cdef uint64_t a = A, b = B
    cdef int64_t iwa = wa, iwb = wb
    cdef uint64_t F1 = <uint64_t>q0 * a
    cdef uint64_t F2 = <uint64_t>q0 * b
    cdef long long q, count = 0
    cdef double d1lo, d1hi, d2lo, d2hi, plo, phi
    cdef bint ok1, ok2
    unc = []
    for q in range(q0, q1 + 1):
        ok1 = _dist(F1, q * iwa, &d1lo, &d1hi)
        ok2 = _dist(F2, q * iwb, &d2lo, &d2hi)
        F1 += a
        F2 += b
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


def count_box_seg(A, wa, B, wb, long long q0, long long q1,
                  double T_lo, double T_hi, double eps_lo, double eps_hi):
    cdef uint64_t a = A, b = B
    cdef int64_t iwa = wa, iwb = wb
    cdef uint64_t F1 = <uint64_t>q0 * a
    cdef uint64_t F2 = <uint64_t>q0 * b
    cdef long kmax = <long>T_hi + 1
    cdef long k, m
    cdef long long q, count = 0, cq
    cdef double r1lo, r1hi, r2lo, r2hi, axlo, axhi, aylo, ayhi
    cdef int c1, c2, c3
    cdef bint ok1, ok2, bad
    unc = []
    for q in range(q0, q1 + 1):
        ok1 = _signed(F1, q * iwa, &r1lo, &r1hi)
        ok2 = _signed(F2, q * iwb, &r2lo, &r2hi)
        F1 += a
        F2 += b
        if not (ok1 and ok2):
            unc.append(q)
            continue
        cq = 0
        bad = 0
        for k in range(-kmax, kmax + 1):
            if not _abs_iv(k, r1lo, r1hi, &axlo, &axhi):
                bad = 1
                break
            if axhi <= T_lo:
                c1 = 1
            elif axlo > T_hi:
                continue
            else:
                c1 = 2
            for m in range(-kmax, kmax + 1):
                if not _abs_iv(m, r2lo, r2hi, &aylo, &ayhi):
                    bad = 1
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
                    bad = 1
                    break
            if bad:
                break
        if bad:
            unc.append(q)
        else:
            count += cq
    return count, unc


def recsum_seg(A, wa, B, wb, long long q0, long long q1):
    cdef uint64_t a = A, b = B
    cdef int64_t iwa = wa, iwb = wb
    cdef uint64_t F1 = <uint64_t>q0 * a
    cdef uint64_t F2 = <uint64_t>q0 * b
    cdef long long q, n = 0
    cdef double d1lo, d1hi, d2lo, d2hi, plo, phi
    cdef double s_lo = 0.0, s_hi = 0.0
    cdef int e_lo, e_hi
    cdef long long layers[NLAYERS]
    cdef int i
    cdef bint ok1, ok2
    for i in range(NLAYERS):
        layers[i] = 0
    unc = []
    for q in range(q0, q1 + 1):
        ok1 = _dist(F1, q * iwa, &d1lo, &d1hi)
        ok2 = _dist(F2, q * iwb, &d2lo, &d2hi)
        F1 += a
        F2 += b
        if not (ok1 and ok2):
            unc.append(q)
            continue
        plo = d1lo * d2lo * ONE_M
        phi = d1hi * d2hi * ONE_P
        frexp(plo, &e_lo)
        frexp(phi, &e_hi)
        if e_lo != e_hi or -e_lo >= NLAYERS or -e_lo < 0:
            unc.append(q)
            continue
        layers[-e_lo] += 1
        s_lo += ONE_M / phi
        s_hi += ONE_P / plo
        n += 1
    return s_lo, s_hi, n, [layers[i] for i in range(NLAYERS)], unc


def phi_seg(A, wa, B, wb, long long q0, long long q1, long long stride, long long qmax,
            double rmin_lo, double rmin_hi):
    cdef uint64_t a = A, b = B
    cdef int64_t iwa = wa, iwb = wb
    cdef uint64_t F1 = <uint64_t>q0 * a
    cdef uint64_t F2 = <uint64_t>q0 * b
    cdef long long q, q_stop = q1 + 1
    cdef double d1lo, d1hi, d2lo, d2hi, vlo, vhi
    cdef bint ok1, ok2, new_min
    rq, rlo, rhi, rmlo, rmhi = [], [], [], [], []
    for q in range(q0, q1 + 1):
        ok1 = _dist(F1, q * iwa, &d1lo, &d1hi)
        ok2 = _dist(F2, q * iwb, &d2lo, &d2hi)
        F1 += a
        F2 += b
        if not (ok1 and ok2):
            q_stop = q
            break
        vlo = <double>q * d1lo * d2lo * ONE_M
        vhi = <double>q * d1hi * d2hi * ONE_P
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
