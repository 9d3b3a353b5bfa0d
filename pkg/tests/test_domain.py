import math
from fractions import Fraction

import numpy as np
import pytest

from multdioph.domain import (
    DELTA_X, DELTA_Y, OUTSIDE, PieceLabel, Slice, classify_H1, classify_Z, containment_check,
    cover_pieces, flow_for, flow_map, g_map, h1_memberships, lipschitz_cover, make_plan,
    partition_check, tiling_check, vol_S0, z_memberships,
)
from multdioph.errors import ConditionViolated, IndexOutOfRange, UndecidablePredicate
from multdioph.realnum import ExpRational, Interval

E2 = ExpRational(1, -2)


def _close(iv, x, tol=1e-12):
    return abs(float(iv.mid) - x) <= tol * max(1.0, abs(x))


class TestPlan:
    def test_integer_R_boundary(self):
        plan = make_plan(E2, 1, 100)
        assert plan.N == 2
        assert _close(plan.nu(), math.exp(-1))
        assert _close(plan.R(), 2.0)
        assert _close(plan.V(), 50 * math.exp(-2))

    def test_rational_eps(self):
        plan = make_plan("0.001", Fraction(1, 2), 10 ** 6)
        assert plan.N == 5
        assert _close(plan.R(), math.log(250))
        assert _close(plan.nu(), 250 ** (-1 / 5))
        assert abs(float(plan.neg_log_nu().mid) - 1.10429) < 1e-5

    def test_half_integer_R(self):
        plan = make_plan(ExpRational(1, Fraction(-5, 2)), 1, 10)
        assert plan.N == 2
        assert _close(plan.nu(), math.exp(-1.25))

    def test_just_below_and_above_integer(self):
        # R = 3 - tiny and R = 3 + tiny sit on either side of the floor
        below = make_plan(ExpRational(Fraction(1000001, 1000000), -3), 1, 10)
        above = make_plan(ExpRational(Fraction(999999, 1000000), -3), 1, 10)
        assert below.N == 2 and above.N == 3

    @pytest.mark.parametrize("eps,T,Q", [("0.001", Fraction(1, 2), 1000), ("1e-4", 2, 10 ** 5),
                                         ("0.01", 1, 10 ** 4), (E2, 1, 100), ("3e-7", 3, 10 ** 6)])
    def test_invariants(self, eps, T, Q):
        plan = make_plan(eps, T, Q)
        nu = plan.nu(128)
        assert nu.ge(Fraction(1, 10 ** 9)) and float(nu.lo) >= math.exp(-2) * (1 - 1e-15)
        assert float(nu.hi) <= math.exp(-1) * (1 + 1e-15)
        assert 1 <= plan.N <= float(plan.R().hi)
        assert (plan.neg_log_nu() * plan.N).contains(plan.R().mid)
        eQ = plan.eps.interval(128) * plan.Q
        # equality V = eps Q / 2 is attained when R is an integer
        assert plan.V().lt(eQ / 2) is not True and plan.V().gt(eQ) is not True
        assert plan.volume_bounds() == (True, True)
        assert list(plan.indices) == list(range(-plan.N + 1, plan.N + 1))
        assert tiling_check(plan)

    def test_requires_theorem_mode(self):
        with pytest.raises(ConditionViolated):
            make_plan("0.2", 1, 10)

    def test_index_range(self):
        plan = make_plan(E2, 1, 100)
        flow_map(plan, -1)
        flow_map(plan, 2)
        for bad in (-2, 3):
            with pytest.raises(IndexOutOfRange):
                flow_map(plan, bad)


class TestClassify:
    def test_z_examples(self):
        args = ("0.01", Fraction(1, 2), 10)
        assert classify_Z(("0.05", "0.05", 1), *args) == PieceLabel("Z1")
        assert classify_Z(("-0.05", "0.05", 1), *args) == PieceLabel("Z2")
        assert classify_Z(("0.05", "-0.05", 1), *args) == PieceLabel("Z3")
        assert classify_Z(("-0.05", "-0.05", 1), *args) == PieceLabel("Z4")
        assert classify_Z(("0.3", 0, 5), *args) == PieceLabel("R1")
        assert classify_Z((0, "0.3", 5), *args) == PieceLabel("R2")
        assert classify_Z(("0.3", "0.3", 5), *args) == OUTSIDE
        assert classify_Z(("0.05", "0.05", 11), *args) == OUTSIDE

    def test_origin_line_in_both_R(self):
        args = ("0.01", Fraction(1, 2), 10)
        assert z_memberships((0, 0, 3), *args) == [PieceLabel("R1"), PieceLabel("R2")]
        assert classify_Z((0, 0, 3), *args) == PieceLabel("R1")

    def test_seam_raises(self):
        # an input ball straddling the seam xy = eps can never be decided
        d = Fraction(1, 10 ** 30)
        with pytest.raises(UndecidablePredicate):
            z_memberships((Interval(Fraction(1, 10) - d, Fraction(1, 10) + d),
                           Fraction(1, 10), 1), "0.01", 1, 10)

    def test_h1_examples(self):
        plan = make_plan(E2, 1, 100)
        assert classify_H1(("0.4", "0.3"), plan) == Slice(1)
        assert classify_H1(("0.9", "0.1"), plan) == DELTA_X
        assert classify_H1(("0.01", "0.5"), plan) == DELTA_Y
        assert classify_H1(("0.3", "0.4"), plan) == Slice(0)
        assert classify_H1(("0.9", "0.9"), plan) == OUTSIDE

    def test_h1_exactly_one(self):
        plan = make_plan("0.001", Fraction(1, 2), 1000)
        rng = np.random.default_rng(5)
        for _ in range(200):
            r = math.exp(rng.uniform(-6, 6))
            xy = rng.uniform(0, 0.001)
            p = (Fraction(math.sqrt(xy / r)), Fraction(math.sqrt(xy * r)))
            found = h1_memberships(p, plan)
            assert len(found) <= 1
            assert classify_H1(p, plan) == (found[0] if found else OUTSIDE)

    def test_g_map_sends_slices_to_S0(self):
        plan = make_plan("0.001", Fraction(1, 2), 1000)
        for i in plan.indices:
            r = float(plan.nu()) ** i * 1.3
            p = (Fraction(math.sqrt(0.0005 / r)), Fraction(math.sqrt(0.0005 * r)))
            assert classify_H1(p, plan) == Slice(i)
            gx, gy = g_map(plan, i, p, 256)
            assert classify_H1((gx, gy), plan) == Slice(0)


class TestVolumes:
    def test_formula(self):
        plan = make_plan(E2, 1, 100)
        assert _close(vol_S0(plan), math.exp(-2) / 2)

    @pytest.mark.parametrize("eps,T", [(E2, 1), ("0.001", Fraction(1, 2))])
    def test_monte_carlo_area(self, eps, T):
        plan = make_plan(eps, T, 10)
        e = float(plan.eps.interval(64).mid)
        nu = float(plan.nu())
        n = 2_000_000
        rng = np.random.default_rng(11)
        w, h = math.sqrt(e), math.sqrt(e / nu)
        x = rng.uniform(0, w, n)
        y = rng.uniform(0, h, n)
        hit = (y >= x) & (y * nu < x) & (x * y < e)
        p = hit.mean()
        est = p * w * h
        sigma = math.sqrt(p * (1 - p) / n) * w * h
        assert abs(est - float(vol_S0(plan))) <= 3 * sigma


class TestFlows:
    def test_identity_index(self):
        plan = make_plan(E2, 1, 100)
        a, b, c = flow_map(plan, 0).coeffs()
        th = plan.theta()
        assert a == th and b == th
        assert _close(c, 1 / float(th) ** 2)

    def test_formula_i1(self):
        plan = make_plan(E2, 1, 100)
        theta = (50 * math.exp(-2)) ** (1 / 3) / math.exp(-1)
        a, b, c = flow_map(plan, 1).coeffs()
        assert _close(a, theta * math.exp(-0.5))
        assert _close(b, theta * math.exp(0.5))
        assert _close(c, theta ** -2)

    @pytest.mark.parametrize("eps,T,Q", [(E2, 1, 100), ("0.001", Fraction(1, 2), 10 ** 6), ("1e-4", 2, 10 ** 3)])
    def test_product_is_one(self, eps, T, Q):
        plan = make_plan(eps, T, Q)
        for i in plan.indices:
            f = flow_map(plan, i)
            assert f.det_exact == 1
            assert f.det_interval(256).contains(1)
            assert f.det_interval(256).width < Fraction(1, 2 ** 200)
            p = (Fraction(1, 3), Fraction(2, 7), Fraction(5))
            back = f.invert(f.apply(p, 256), 256)
            assert all(b.contains(v) for b, v in zip(back, p))

    def test_flow_for(self):
        plan = make_plan("0.001", Fraction(1, 2), 1000)
        assert flow_for(plan, DELTA_X).i == plan.N
        assert flow_for(plan, DELTA_Y).i == 1 - plan.N
        assert flow_for(plan, Slice(-2)).i == -2
        with pytest.raises(ValueError):
            flow_for(plan, PieceLabel("Z1"))


class TestContainmentAndCovers:
    @pytest.mark.parametrize("eps,T,Q", [(E2, 1, 100), ("0.001", Fraction(1, 2), 10 ** 6)])
    def test_containment(self, eps, T, Q):
        plan = make_plan(eps, T, Q)
        for lab in [DELTA_X, DELTA_Y] + [Slice(i) for i in plan.indices]:
            rep = containment_check(plan, lab, samples=2000, seed=1)
            assert rep.holds, rep
            assert rep.samples == 2000
            assert rep.max_coord <= rep.bound

    def test_containment_region_string(self):
        plan = make_plan(E2, 1, 100)
        assert containment_check(plan, "Slice(0)", samples=500).holds
        assert containment_check(plan, "DeltaX", samples=500).flow_index == plan.N

    @pytest.mark.parametrize("eps,T,Q", [(E2, 1, 100), ("0.001", Fraction(1, 2), 10 ** 6), ("1e-4", 2, 10 ** 4)])
    def test_covers(self, eps, T, Q):
        plan = make_plan(eps, T, Q)
        for lab in [DELTA_X, DELTA_Y, Slice(0), Slice(plan.N)]:
            rep = lipschitz_cover(plan, lab, samples=3000, seed=2)
            assert rep.holds, rep
            assert len(rep.pieces) == 5
            for name, obs in rep.observed.items():
                assert obs <= rep.analytic[name] * (1 + 1e-9)

    def test_sheet_piece(self):
        plan = make_plan(E2, 1, 100)
        names = [pc.name for pc in cover_pieces(plan, Slice(1))]
        assert names == ["ratio_lower", "ratio_upper", "bottom", "top", "sheet"]
        with pytest.raises(IndexOutOfRange):
            lipschitz_cover(plan, Slice(7))


class TestPartition:
    def test_small_run(self):
        plan = make_plan("0.001", Fraction(1, 2), 1000)
        rep = partition_check(plan, samples=4000, seed=3)
        assert rep.holds, rep.examples[:3]
        assert rep.z_inside > 0 and rep.h1_inside > 0 and rep.gi_checked > 0

    def test_deterministic(self):
        plan = make_plan(E2, 1, 100)
        a = partition_check(plan, samples=1000, seed=9)
        b = partition_check(plan, samples=1000, seed=9)
        assert a == b
