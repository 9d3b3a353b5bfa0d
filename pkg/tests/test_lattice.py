import math
import random
from fractions import Fraction

import mpmath
import pytest

from multdioph.counting import CountParams, count_M
from multdioph.domain import DELTA_X, DELTA_Y, PieceLabel, Slice, lipschitz_cover, make_plan
from multdioph.errors import ConditionViolated, IndexOutOfRange
from multdioph.lattice import (
    H1_LABEL, Basis3, FlowImage, PrismRegion, TauImage, ZRegion, _count_direct, apply_flow,
    apply_tau, count_in_region, count_in_region_naive, counting_lemma_check,
    decomposition_identity_check, exhaustive_lambda1, lambda1, lattice_from_pair, lattice_j,
    minbound_check, minbound_grid, slice_partition_check, z1_discrepancy_check,
)
from multdioph.phi import phi_at, phi_profile
from multdioph.realnum import ExpRational, Interval, eval as eval_real

from oracle import brute_flowed_lambda1_sq, brute_lambda1_sq, mp


def mp_real(x):
    iv = eval_real(x, 200)
    return mp(iv.mid)

E2 = ExpRational(1, -2)


def random_rational_basis(rng, denom=64):
    while True:
        rows = [[rng.randint(-2 * denom, 2 * denom) for _ in range(3)] for _ in range(3)]
        b = Basis3.from_rationals([[Fraction(v, denom) for v in r] for r in rows])
        if abs(b.det_exact) >= Fraction(1, 10):
            return rows, b


class TestConstruction:
    def test_pair_lattice(self, s2s3, golden_s2):
        L = lattice_from_pair(s2s3)
        m = L.matrix(64)
        assert [[float(v.mid) for v in r] for r in m[:2]] == [[1, 0, 0], [0, 1, 0]]
        assert abs(float(m[2][0].mid) - math.sqrt(2)) < 1e-15 and abs(float(m[2][1].mid) - math.sqrt(3)) < 1e-15
        assert L.det_exact == 1 and L.det_interval().contains(1)
        g = lattice_from_pair(golden_s2).floats()
        assert g[2] == pytest.approx([(1 + math.sqrt(5)) / 2, math.sqrt(2), 1])

    def test_tau(self, s2s3):
        L = lattice_from_pair(s2s3)
        assert (apply_tau(1, L).floats() == L.floats()).all()
        t4 = apply_tau(4, L).floats()
        assert (t4[:, :2] == -L.floats()[:, :2]).all() and (t4[:, 2] == L.floats()[:, 2]).all()
        for j in range(1, 5):
            twice = apply_tau(j, apply_tau(j, L))
            assert (twice.floats() == L.floats()).all()
            assert twice.det_exact == 1
            assert abs(apply_tau(j, L).det_exact) == 1
            assert apply_tau(j, L).det_interval().contains(apply_tau(j, L).det_exact)
        for bad in (0, 5):
            with pytest.raises(IndexOutOfRange):
                apply_tau(bad, L)

    def test_flow_rows(self, s2s3):
        plan = make_plan(E2, 1, 100)
        F = apply_flow(plan, 0, lattice_from_pair(s2s3)).matrix(128)
        th = plan.theta(128)
        assert F[0][0] == th and F[1][1] == th
        assert F[0][1] == Interval.exact(0) and F[1][0] == Interval.exact(0)
        assert F[2][0].contains((th * eval_real(s2s3[0], 128)).mid)
        assert abs(float(F[2][2].mid) - float(th.mid) ** -2) < 1e-12
        with pytest.raises(IndexOutOfRange):
            apply_flow(plan, 3, lattice_from_pair(s2s3))

    @pytest.mark.parametrize("eps,T,Q", [(E2, 1, 100), ("0.001", Fraction(1, 2), 10 ** 6), ("1e-4", 2, 10 ** 5)])
    def test_det_invariance(self, s2s3, eps, T, Q):
        plan = make_plan(eps, T, Q)
        for j in range(1, 5):
            for i in plan.indices:
                b = lattice_j(s2s3, j, plan, i)
                assert abs(b.det_exact) == 1
                assert b.det_interval(256).contains(b.det_exact)


class TestLambda1:
    def test_examples(self, s2s3):
        idn = lambda1(Basis3.from_rationals([[1, 0, 0], [0, 1, 0], [0, 0, 1]]))
        assert idn.length_sq == Interval.exact(1) and idn.length.contains(1)
        assert sorted(map(abs, idn.witness)) == [0, 0, 1]
        d = lambda1(Basis3.from_rationals([[2, 0, 0], [0, Fraction(1, 2), 0], [0, 0, 1]]))
        assert d.length_sq == Interval.exact(Fraction(1, 4)) and d.witness == (0, 1, 0)
        lam = lambda1(lattice_from_pair(s2s3))
        assert lam.length.contains(1) and lam.certified
        best = exhaustive_lambda1(lattice_from_pair(s2s3), bound=10)
        assert best[0].contains(1)

    def test_scaling(self):
        rng = random.Random(3)
        for _ in range(10):
            _, b = random_rational_basis(rng)
            base = lambda1(b)
            for c in (Fraction(3), Fraction(-1, 2), Fraction(7, 5)):
                s = lambda1(b.scaled(c))
                assert s.length_sq == base.length_sq * (c * c)
                assert s.witness == base.witness

    def test_oracle_random_bases(self):
        rng = random.Random(20)
        checked = 0
        for _ in range(25):
            rows, b = random_rational_basis(rng)
            res = lambda1(b)
            num, den = brute_lambda1_sq(rows, 64, bound=10)
            exact = Fraction(num, den)
            assert res.length_sq.lo <= exact
            if max(res.box) <= 10:
                checked += 1
                assert res.length_sq.contains(exact)
                # the witness vector has the minimal length
                v = [sum(Fraction(rows[k][c], 64) * res.witness[k] for k in range(3)) for c in range(3)]
                assert sum(x * x for x in v) == exact
        assert checked >= 20

    def test_flowed_pair_lattices(self, s2s3, golden_s2):
        plan = make_plan("0.001", Fraction(1, 2), 1000)
        for pair in (s2s3, golden_s2):
            for i in (plan.N, 0, 1 - plan.N):
                b = lattice_j(pair, 2, plan, i)
                res = lambda1(b)
                best, _ = exhaustive_lambda1(b, bound=4)
                assert res.length_sq.lo <= best.hi
                a, bb, c = (mp(v.mid) for v in b.form.flow.coeffs(256))
                qmax = int(mpmath.ceil(mp(res.length.hi) / c))
                exact = brute_flowed_lambda1_sq(mp_real(pair[0]), mp_real(pair[1]), a, bb, c, qmax)
                assert abs(exact - mp(res.length_sq.mid)) < mpmath.mpf(10) ** -25
                assert res.length.width < Fraction(1, 2 ** 40)
                # the witness is a genuine lattice vector of that length
                v = [sum((row[k] * w for row, w in zip(b.matrix(256), res.witness)), Interval.exact(0))
                     for k in range(3)]
                assert (v[0].square() + v[1].square() + v[2].square()).contains(res.length_sq.mid) or \
                    abs(float((v[0].square() + v[1].square() + v[2].square()).mid) - float(res.length_sq.mid)) < 1e-25


class TestCounting:
    @pytest.mark.parametrize("eps,T,Q", [("0.1", 1, 2), ("0.01", 1, 1000), ("0.001", Fraction(1, 2), 5000),
                                         ("0.05", 2, 300)])
    def test_equals_count_M(self, s2s3, eps, T, Q):
        L = lattice_from_pair(s2s3)
        assert count_in_region(L, ZRegion(eps, T, Q)) == count_M(s2s3, CountParams(eps, T, Q))

    def test_naive_agrees(self, golden_s2):
        L = lattice_from_pair(golden_s2)
        reg = ZRegion("0.05", 1, 60)
        assert count_in_region(L, reg) == count_in_region_naive(L, reg)

    def test_R_counts_zero(self, s2s3):
        L = lattice_from_pair(s2s3)
        for lab in ("R1", "R2"):
            assert count_in_region(L, ZRegion("0.01", 2, 500, PieceLabel(lab))) == 0

    def test_tau_equivariance(self, s2s3):
        L = lattice_from_pair(s2s3)
        for lab in ("Z1", "Z2", "Z3", "Z4"):
            inner = ZRegion("0.01", 1, 2000, PieceLabel(lab))
            base = count_in_region(L, inner)
            for j in range(1, 5):
                assert count_in_region(apply_tau(j, L), TauImage(inner, j)) == base

    def test_flow_equivariance(self, s2s3):
        plan = make_plan("0.001", Fraction(1, 2), 2000)
        L = apply_tau(3, lattice_from_pair(s2s3))
        for lab in [DELTA_X, DELTA_Y] + [Slice(i) for i in plan.indices]:
            inner = PrismRegion(plan, lab)
            fi = 0 if lab.kind != "Slice" else lab.index
            b = apply_flow(plan, fi, L)
            img = FlowImage(inner, b.form.flow)
            direct = _count_direct(b.form, img, None, 1024)   # skips the preimage shortcut
            assert direct == count_in_region(L, inner) == count_in_region(b, img)

    def test_slice_partition(self, s2s3, golden_s2):
        plan = make_plan("0.001", Fraction(1, 2), 5000)
        for pair in (s2s3, golden_s2):
            for j in range(1, 5):
                rep = slice_partition_check(pair, plan, j)
                assert rep.holds and rep.h1_count > 0
        L = lattice_from_pair(s2s3)
        assert count_in_region(L, PrismRegion(plan, H1_LABEL)) == \
            count_in_region(L, ZRegion(plan.eps, plan.T, plan.Q, PieceLabel("Z1")))

    def test_decomposition(self, s2s3):
        rep = decomposition_identity_check(s2s3, CountParams("0.01", 1, 3000))
        assert rep.holds and rep.r1 == 0 and rep.r2 == 0 and rep.stated_r == 3
        assert rep.total == sum(rep.z_counts) == count_M(s2s3, CountParams("0.01", 1, 3000))
        assert rep.z_counts == rep.z_via_tau


class TestLemmas:
    def test_minbound_example(self, s2s3):
        plan = make_plan("0.01", Fraction(1, 2), 1000)
        phi = phi_at(phi_profile(s2s3, 1000), 1000)
        reps = minbound_grid(s2s3, plan, phi)
        assert len(reps) == 4 * len(plan.indices)
        assert all(r.holds for r in reps)
        assert all(r.threshold <= 0.6300 for r in reps)

    def test_minbound_condition(self, s2s3):
        plan = make_plan("0.01", Fraction(1, 2), 10)
        with pytest.raises(ConditionViolated):
            minbound_check(s2s3, plan, 0, 1, Fraction(1, 4))

    def test_minbound_q0_branch(self, s2s3):
        # at i = N the vector (1, 0, 0) has length theta nu^(N/2) = theta sqrt(eps) / T
        plan = make_plan("0.001", Fraction(1, 2), 10 ** 5)
        phi = phi_at(phi_profile(s2s3, 10 ** 5, stride=10 ** 5), 10 ** 5)
        rep = minbound_check(s2s3, plan, plan.N, 1, phi)
        edge = plan.theta() * plan.sqrt_eps() / plan.T
        assert rep.holds and rep.lambda1_lo <= float(edge.hi) * (1 + 1e-12)

    def test_invalid_witness_reported(self, s2s3):
        plan = make_plan("0.01", Fraction(1, 2), 1000)
        rep = minbound_check(s2s3, plan, 0, 1, Fraction(10))
        assert not rep.holds and rep.witness_valid is False

    def test_counting_lemma(self, s2s3):
        plan = make_plan("0.001", Fraction(1, 2), 10 ** 4)
        for i in (0, plan.N):
            b = lattice_j(s2s3, 1, plan, i)
            region = FlowImage(PrismRegion(plan, Slice(i)), b.form.flow)
            cover = lipschitz_cover(plan, Slice(i), samples=1000)
            rep = counting_lemma_check(b, region, plan.V(), cover)
            assert rep.holds and rep.bound >= 3 ** 18 * 5

    def test_z1_discrepancy(self, s2s3):
        params = CountParams("0.001", Fraction(1, 2), 10 ** 4)
        phi = phi_at(phi_profile(s2s3, 10 ** 4), 10 ** 4)
        for j in range(1, 5):
            rep = z1_discrepancy_check(s2s3, params, phi, j)
            assert rep.holds
            assert rep.volume == pytest.approx(0.001 * (1 + math.log(250)) * 10 ** 4)
