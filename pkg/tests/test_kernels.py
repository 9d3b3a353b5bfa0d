"""The compiled and pure-Python kernels must agree bit for bit."""
import random
from fractions import Fraction

import mpmath
import pytest

from multdioph import kernels
from multdioph.realnum import frac_mantissa64, parse_real

from oracle import dist

py = kernels.python_backend
cc = kernels.compiled_backend

needs_compiled = pytest.mark.skipif(cc is None, reason="compiled extension not built")


def _m(text):
    return frac_mantissa64(parse_real(text))


PAIRS = [("sqrt:2", "sqrt:3"), ("quad:1,1,2,5", "sqrt:2"), ("sqrt:2", "sqrt:5"), ("sqrt:7", "quad:-3,5,4,13")]


@needs_compiled
@pytest.mark.parametrize("a,b", PAIRS)
def test_backends_identical(a, b):
    (A, wa), (B, wb) = _m(a), _m(b)
    rng = random.Random(hash((a, b)) & 0xFFFF)
    for _ in range(4):
        q0 = rng.randint(1, 10 ** 6)
        q1 = q0 + rng.randint(0, 3000)
        eps = rng.choice([0.1, 1e-3, 2.0 ** -12])
        T = rng.choice([0.5, 1.0, 2.0, 3.5])
        assert py.count_diag_seg(A, wa, B, wb, q0, q1, eps, eps) == cc.count_diag_seg(A, wa, B, wb, q0, q1, eps, eps)
        assert py.count_box_seg(A, wa, B, wb, q0, q1, T, T, eps, eps) == \
            cc.count_box_seg(A, wa, B, wb, q0, q1, T, T, eps, eps)
        assert py.recsum_seg(A, wa, B, wb, q0, q1) == cc.recsum_seg(A, wa, B, wb, q0, q1)
        assert py.phi_seg(A, wa, B, wb, q0, q1, 97, q1, 1.0, 1.0) == \
            cc.phi_seg(A, wa, B, wb, q0, q1, 97, q1, 1.0, 1.0)


def test_backend_selection():
    assert kernels.BACKEND in ("cython", "python")
    assert (kernels.backend is py) == (kernels.BACKEND == "python")


def test_diag_filter_is_sound():
    """Decided q agree with the 50-digit oracle; undecided ones are returned."""
    (A, wa), (B, wb) = _m("sqrt:2"), _m("sqrt:3")
    eps = 0.01
    count, unc = py.count_diag_seg(A, wa, B, wb, 1, 3000, eps, eps)
    s2, s3 = mpmath.sqrt(2), mpmath.sqrt(3)
    truth = [q for q in range(1, 3001) if dist(q * s2) * dist(q * s3) < eps]
    decided_true = len([q for q in truth if q not in unc])
    assert count == decided_true


def test_recsum_layers_match_oracle():
    (A, wa), (B, wb) = _m("sqrt:2"), _m("sqrt:3")
    s_lo, s_hi, n, layers, unc = py.recsum_seg(A, wa, B, wb, 1, 500)
    s2, s3 = mpmath.sqrt(2), mpmath.sqrt(3)
    exp_layers = [0] * kernels.NLAYERS
    total = mpmath.mpf(0)
    for q in range(1, 501):
        if q in unc:
            continue
        p = dist(q * s2) * dist(q * s3)
        total += 1 / p
        exp_layers[int(mpmath.floor(-mpmath.log(p, 2)))] += 1
    assert layers == exp_layers
    assert s_lo <= total <= s_hi
    assert n == 500 - len(unc)


def test_phi_seg_records():
    (A, wa), (B, wb) = _m("sqrt:2"), _m("sqrt:3")
    rq, rlo, rhi, rmlo, rmhi, q_stop, mlo, mhi = py.phi_seg(A, wa, B, wb, 1, 10, 5, 10, float("inf"), float("inf"))
    assert q_stop == 11
    assert rq == [1, 4, 5, 7, 10]  # records 1, 4, 7; stride 5; horizon 10
    assert rmlo[-1] == mlo and abs(mlo - 0.087488609) < 1e-8
    assert Fraction(rlo[0]) <= Fraction(rhi[0])
