import math
from fractions import Fraction

import mpmath
import pytest

from multdioph.counting import (
    CONSTANTS, CountParams, corollary_main_interval, corollary_report, count_M, count_M_diag,
    count_M_series, error_bound, main_term, main_term_interval, theorem_report,
)
from multdioph.errors import ConditionViolated
from multdioph.phi import phi_at, phi_profile
from multdioph.realnum import ExpRational, parse_real

from oracle import brute_count, brute_diag

S2, S3 = mpmath.sqrt(2), mpmath.sqrt(3)


class TestCounts:
    def test_examples(self, s2s3):
        assert count_M(s2s3, CountParams("0.1", 1, 2)) == 2
        assert count_M(s2s3, CountParams("0.05", 1, 2)) == 0
        assert count_M_diag(s2s3, "0.1", 10) == 7
        assert count_M_diag(s2s3, "0.2", 1) == 1
        assert count_M_diag(s2s3, "0.05", 1) == 0

    @pytest.mark.parametrize("eps,T,Q", [("0.1", 1, 30), ("0.02", 2, 60), ("0.3", Fraction(3, 2), 25),
                                         ("0.001", Fraction(1, 2), 400), ("0.05", 3, 40)])
    def test_against_brute_force(self, s2s3, eps, T, Q):
        assert count_M(s2s3, CountParams(eps, T, Q)) == brute_count(S2, S3, Fraction(eps), T, Q)

    def test_other_pairs(self, golden_s2, s2s5):
        phi = (1 + mpmath.sqrt(5)) / 2
        assert count_M(golden_s2, CountParams("0.05", 1, 80)) == brute_count(phi, S2, Fraction("0.05"), 1, 80)
        assert count_M(s2s5, CountParams("0.03", 2, 50)) == brute_count(S2, mpmath.sqrt(5), Fraction("0.03"), 2, 50)

    def test_diag_equals_box_at_half(self, s2s3, golden_s2):
        for pair in (s2s3, golden_s2):
            for eps in ("0.01", "0.001", "1/64"):
                Qs = [10, 1000, 54321]
                assert count_M_series(pair, eps, Fraction(1, 2), Qs) == \
                    [count_M_diag(pair, eps, Q) for Q in Qs]

    def test_diag_oracle_list(self, s2s3):
        assert brute_diag(S2, S3, Fraction(1, 10), 10) == [2, 3, 4, 5, 7, 8, 10]

    def test_non_integral_q_floors(self, s2s3):
        assert count_M_diag(s2s3, "0.1", Fraction(109, 10)) == 7
        assert count_M_diag(s2s3, "0.1", Fraction(69, 10)) == count_M_diag(s2s3, "0.1", 6)

    def test_parallel_blocks_identical(self, s2s3):
        Qs = [10 ** 3, 10 ** 5, 3 * 10 ** 5]
        assert count_M_series(s2s3, "0.001", 1, Qs, jobs=1) == count_M_series(s2s3, "0.001", 1, Qs, jobs=3)

    def test_monotone(self, s2s3):
        base = count_M(s2s3, CountParams("0.01", 1, 5000))
        assert count_M(s2s3, CountParams("0.02", 1, 5000)) >= base
        assert count_M(s2s3, CountParams("0.01", 2, 5000)) >= base
        assert count_M(s2s3, CountParams("0.01", 1, 6000)) >= base

    def test_empty_below_threshold(self, s2s3):
        prof = phi_profile(s2s3, 1000)
        phi = phi_at(prof, 1000)
        eps = phi / 1000 * Fraction(99, 100)
        assert count_M_diag(s2s3, eps, 1000) == 0

    def test_decimal_ball_pair(self):
        pair = (parse_real("dec:1.41421356237309504880168872:1e-25"), parse_real("sqrt:3"))
        assert count_M_diag(pair, "0.1", 10) == 7


class TestTerms:
    def test_main_term_examples(self):
        mt = main_term(CountParams(ExpRational(1, -2), 1, 100))
        assert abs(mt - 1200 * math.exp(-2)) < 1e-9
        # T^2/eps = e^2 gives factor 3
        mt = main_term(CountParams(ExpRational(Fraction(1, 4), -2), Fraction(1, 2), 1000))
        assert abs(mt - 3000 * math.exp(-2)) < 1e-9
        mt = main_term(CountParams("0.001", Fraction(1, 2), 10 ** 6))
        assert abs(mt - 4000 * (math.log(250) + 1)) < 1e-6

    def test_error_bound_examples(self):
        # T = 1/2 and log(T^2/eps) = 2 with eps Q / phi = 1 gives 8 * 3^28
        eps = ExpRational(Fraction(1, 4), -2)
        Q = (4 * ExpRational(1, 2).interval(300) * Fraction(1, 4)).mid  # phi / eps with phi = 1/4
        b = error_bound(CountParams(eps, Fraction(1, 2), Q), Fraction(1, 4))
        assert b == pytest.approx(8 * 3 ** 28, rel=1e-12)
        # T = 1, eps = e^-2, Q = e^2, phi = 1/4: C1 * 9 * 2 * 4^(2/3)
        Q = ExpRational(1, 2).interval(300).mid
        b = error_bound(CountParams(ExpRational(1, -2), 1, Q), Fraction(1, 4))
        assert b == pytest.approx(CONSTANTS.C1 * 9 * 2 * 4 ** (2 / 3), rel=1e-12)
        # ratio 1 with rational inputs
        b = error_bound(CountParams(Fraction(1, 1000), Fraction(1, 2), 100), Fraction(1, 10))
        assert b == pytest.approx(CONSTANTS.C1 * 4 * math.log(250), rel=1e-12)

    def test_corollary_main_matches_main_term(self):
        for eps in ("0.001", "0.0123", "1e-5"):
            a = corollary_main_interval(eps, 10 ** 6, 200)
            b = main_term_interval(CountParams(eps, Fraction(1, 2), 10 ** 6), 200)
            assert a.lt(b) is not True and b.lt(a) is not True
            assert abs(float(a) - float(b)) < 1e-20 * float(a) + 1e-9

    def test_conditions(self):
        with pytest.raises(ConditionViolated):
            CountParams("0.2", 1, 10).require_theorem_mode()
        CountParams(ExpRational(1, -2), 1, 10).require_theorem_mode()
        with pytest.raises(ConditionViolated):
            CountParams("0.1", Fraction(1, 2), 10).require_corollary_mode()
        with pytest.raises(ValueError):
            CountParams("0.1", 1, Fraction(1, 2))
        with pytest.raises(ValueError):
            CountParams("0.1", -1, 10)

    def test_constants_audit(self):
        assert all(CONSTANTS.audit().values())
        assert CONSTANTS.C1 == 3 ** 28 and CONSTANTS.C2 == 4 * CONSTANTS.C1
        assert CONSTANTS.D3 == 3 ** 18 and CONSTANTS.C5 == 8 * CONSTANTS.D3 * 5 * 12 ** 2
        assert 5 * CONSTANTS.C5 < CONSTANTS.C1


class TestReports:
    def test_theorem_report_holds(self, s2s3):
        prof = phi_profile(s2s3, 10 ** 6, stride=10 ** 6)
        rep = theorem_report(s2s3, CountParams("0.001", Fraction(1, 2), 10 ** 6), phi_at(prof, 10 ** 6))
        assert rep.holds and rep.count == 26065
        assert abs(rep.main_term - 26085.8436714) < 1e-6

    def test_theorem_report_exp_eps(self, s2s3):
        prof = phi_profile(s2s3, 100)
        rep = theorem_report(s2s3, CountParams(ExpRational(1, -2), 1, 100), phi_at(prof, 100))
        assert rep.holds and rep.count == count_M(s2s3, CountParams(ExpRational(1, -2), 1, 100))

    def test_empty_range_branch(self, s2s3):
        prof = phi_profile(s2s3, 500)
        phi = phi_at(prof, 500)
        eps = phi / 500 / 2
        rep = theorem_report(s2s3, CountParams(eps, 1, 500), phi)
        assert rep.count == 0 and rep.holds and "empty" in rep.note
        rep = corollary_report(s2s3, eps, 500, phi)
        assert rep.count == 0 and rep.holds

    def test_corollary_report(self, s2s3):
        prof = phi_profile(s2s3, 10 ** 4)
        rep = corollary_report(s2s3, "0.01", 10 ** 4, phi_at(prof, 10 ** 4))
        assert rep.holds
        assert rep.count == count_M(s2s3, CountParams("0.01", Fraction(1, 2), 10 ** 4))

    def test_invalid_witness_flagged(self, s2s3):
        # a phi far above the true running minimum makes the bound tiny
        rep = theorem_report(s2s3, CountParams("0.01", Fraction(1, 2), 10 ** 4), Fraction(1, 4))
        if not rep.holds:
            assert "not a valid witness" in rep.note
