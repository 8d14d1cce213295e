import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from periscreen.errors import ValidationError
from periscreen.stats import (
    ContingencyTable,
    SummaryStats,
    TailMode,
    fisher_exact,
    hypergeom_pmf,
    hypergeom_support,
    log_choose,
    regularized_incomplete_beta,
    student_t_sf,
    welch_t_from_summary,
)

import oracles


class TestLogChoose:
    def test_known_values(self):
        assert log_choose(10, 5) == pytest.approx(math.log(252), rel=1e-14)
        assert log_choose(52, 5) == pytest.approx(math.log(2598960), rel=1e-14)

    @pytest.mark.parametrize("n", [0, 1, 7, 1000, 10**6])
    def test_edges_are_exact_zero(self, n):
        assert log_choose(n, 0) == 0.0
        assert log_choose(n, n) == 0.0

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValidationError):
            log_choose(5, 6)
        with pytest.raises(ValidationError):
            log_choose(-1, 0)
        with pytest.raises(ValidationError):
            log_choose(5.0, 2)

    def test_relative_error_against_exact_integers(self):
        # exact big-integer binomials are cheap up to n ~ 20000
        rng = random.Random(20240301)
        cases = [(n, rng.randint(1, n - 1)) for n in (rng.randint(2, 20000) for _ in range(40))]
        for n, k in cases:
            exact = math.log(math.comb(n, k))
            got = log_choose(n, k)
            assert abs(got - exact) / abs(exact) < 1e-12, (n, k)

    def test_relative_error_at_large_n(self):
        # mpmath loggamma at 40 digits as the independent high-precision route
        import mpmath

        cases = [(10**6, 1), (10**6, 2999), (10**6, 3000), (10**6, 3001),
                 (10**6, 77_777), (10**6, 500_000), (999_983, 444_444)]
        with mpmath.workdps(40):
            for n, k in cases:
                exact = float(
                    mpmath.loggamma(n + 1) - mpmath.loggamma(k + 1) - mpmath.loggamma(n - k + 1)
                )
                got = log_choose(n, k)
                assert abs(got - exact) / abs(exact) < 1e-12, (n, k)


class TestHypergeomPmf:
    def test_point_mass_fraction(self):
        t = ContingencyTable(5, 0, 0, 5)
        assert hypergeom_pmf(5, t) == pytest.approx(1 / 252, rel=1e-12)

    def test_degenerate_margin_is_point_mass(self):
        # empty first row: only one feasible table
        t = ContingencyTable(0, 0, 3, 7)
        assert hypergeom_pmf(0, t) == 1.0

    def test_infeasible_cell_rejected(self):
        t = ContingencyTable(5, 0, 0, 5)
        with pytest.raises(ValidationError):
            hypergeom_pmf(6, t)

    def test_sums_to_one_for_study_margins(self):
        t = ContingencyTable(14, 16, 56, 198)
        total = math.fsum(hypergeom_pmf(x, t) for x in hypergeom_support(t))
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_sums_to_one_random_margins(self):
        rng = random.Random(7)
        for _ in range(1000):
            n = rng.randint(1, 500)
            a = rng.randint(0, n)
            b = rng.randint(0, n - a)
            c = rng.randint(0, n - a - b)
            d = n - a - b - c
            t = ContingencyTable(a, b, c, d)
            total = math.fsum(hypergeom_pmf(x, t) for x in hypergeom_support(t))
            assert total == pytest.approx(1.0, abs=1e-10)

    def test_matches_exact_fractions(self):
        t = ContingencyTable(6, 2, 1, 4)
        for x in hypergeom_support(t):
            exact = oracles.hypergeom_pmf_fraction(x, 6, 2, 1, 4)
            assert hypergeom_pmf(x, t) == pytest.approx(float(exact), rel=1e-12)


class TestFisherExact:
    def test_symmetric_table_is_certain(self):
        assert fisher_exact(ContingencyTable(10, 10, 10, 10)).p_value == 1.0

    def test_small_diagonal_table(self):
        # six feasible tables; the two extremes tie at 1/252 each
        r = fisher_exact(ContingencyTable(5, 0, 0, 5))
        assert r.p_value == pytest.approx(2 / 252, abs=1e-12)
        assert r.statistic == math.inf

    def test_all_zero_table_rejected(self):
        with pytest.raises(ValidationError):
            ContingencyTable(0, 0, 0, 0)

    def test_odds_ratio_values(self):
        assert fisher_exact(ContingencyTable(2, 1, 1, 2)).statistic == pytest.approx(4.0)
        assert fisher_exact(ContingencyTable(0, 1, 1, 0)).statistic == 0.0
        assert math.isnan(fisher_exact(ContingencyTable(0, 1, 0, 1)).statistic)

    def test_tails_complement_identity(self):
        rng = random.Random(99)
        for _ in range(100):
            n = rng.randint(1, 200)
            a = rng.randint(0, n)
            b = rng.randint(0, n - a)
            c = rng.randint(0, n - a - b)
            t = ContingencyTable(a, b, c, n - a - b - c)
            greater = fisher_exact(t, TailMode.GREATER).p_value
            less = fisher_exact(t, TailMode.LESS).p_value
            pmf = hypergeom_pmf(t.a, t)
            assert greater + less - pmf == pytest.approx(1.0, abs=1e-10)

    def test_exhaustive_small_sweep_against_oracle(self):
        # all tables with N <= 12 here; the full N <= 30 sweep runs in acceptance
        for n in range(1, 13):
            for a in range(n + 1):
                for b in range(n - a + 1):
                    for c in range(n - a - b + 1):
                        d = n - a - b - c
                        t = ContingencyTable(a, b, c, d)
                        got = fisher_exact(t).p_value
                        want = oracles.fisher_two_sided(a, b, c, d)
                        assert abs(got - want) < 1e-10, (a, b, c, d)

    def test_one_sided_tails_against_oracle(self):
        rng = random.Random(4242)
        for _ in range(200):
            n = rng.randint(1, 300)
            a = rng.randint(0, n)
            b = rng.randint(0, n - a)
            c = rng.randint(0, n - a - b)
            d = n - a - b - c
            t = ContingencyTable(a, b, c, d)
            assert fisher_exact(t, TailMode.GREATER).p_value == pytest.approx(
                oracles.fisher_greater(a, b, c, d), abs=1e-10
            )
            assert fisher_exact(t, TailMode.LESS).p_value == pytest.approx(
                oracles.fisher_less(a, b, c, d), abs=1e-10
            )

    @given(
        a=st.integers(0, 40), b=st.integers(0, 40),
        c=st.integers(0, 40), d=st.integers(0, 40),
    )
    @settings(max_examples=200, deadline=None)
    def test_two_sided_invariances(self, a, b, c, d):
        if a + b + c + d == 0:
            return
        p = fisher_exact(ContingencyTable(a, b, c, d)).p_value
        swapped_groups = fisher_exact(ContingencyTable(c, d, a, b)).p_value
        swapped_polarity = fisher_exact(ContingencyTable(b, a, d, c)).p_value
        assert p == pytest.approx(swapped_groups, abs=1e-12)
        assert p == pytest.approx(swapped_polarity, abs=1e-12)

    def test_df_sentinel_is_not_nan(self):
        r = fisher_exact(ContingencyTable(1, 2, 3, 4))
        assert r.df == 0.0


class TestStudentTSf:
    def test_zero_is_exactly_half(self):
        for df in (1, 2.5, 10, 1000):
            assert student_t_sf(0.0, df) == 0.5

    def test_cauchy_closed_form(self):
        # df = 1 is Cauchy: sf(t) = 1/2 - atan(t)/pi
        for t in (-5.0, -1.0, 0.5, 1.0, 3.0, 10.0):
            want = 0.5 - math.atan(t) / math.pi
            assert student_t_sf(t, 1.0) == pytest.approx(want, abs=1e-12)

    def test_quadrature_oracle_spot_checks(self):
        for t, df in [(2.0, 10), (-1.3, 4), (0.7, 2), (6.0, 100), (-8.0, 7)]:
            want = oracles.t_sf_quadrature(t, df)
            assert student_t_sf(t, df) == pytest.approx(want, abs=1e-10)

    def test_symmetry(self):
        for df in (1, 3, 17, 250):
            for t in (0.1, 0.9, 2.2, 7.5):
                assert student_t_sf(t, df) + student_t_sf(-t, df) == pytest.approx(
                    1.0, abs=1e-12
                )

    def test_normal_limit_at_huge_df(self):
        for t in (-6.0, -2.0, -0.5, 0.5, 2.0, 6.0):
            normal_tail = math.erfc(t / math.sqrt(2)) / 2
            assert student_t_sf(t, 1e6) == pytest.approx(normal_tail, abs=1e-6)

    def test_infinite_t(self):
        assert student_t_sf(math.inf, 5) == 0.0
        assert student_t_sf(-math.inf, 5) == 1.0

    def test_rejects_bad_df(self):
        with pytest.raises(ValidationError):
            student_t_sf(1.0, 0.0)
        with pytest.raises(ValidationError):
            student_t_sf(1.0, -3)

    def test_incomplete_beta_bounds(self):
        assert regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0
        assert regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0
        with pytest.raises(ValidationError):
            regularized_incomplete_beta(0.0, 1.0, 0.5)


class TestWelch:
    def test_identical_groups(self):
        g = SummaryStats(3.2, 1.1, 20)
        r = welch_t_from_summary(g, g)
        assert r.statistic == 0.0
        assert r.p_value == 1.0

    def test_zero_variance_separation(self):
        r = welch_t_from_summary(SummaryStats(1.0, 0.0, 10), SummaryStats(0.0, 0.0, 10))
        assert r.statistic == math.inf
        assert r.p_value == 0.0
        r = welch_t_from_summary(SummaryStats(0.0, 0.0, 10), SummaryStats(1.0, 0.0, 10))
        assert r.statistic == -math.inf

    def test_zero_variance_equal_means(self):
        r = welch_t_from_summary(SummaryStats(2.0, 0.0, 5), SummaryStats(2.0, 0.0, 9))
        assert r.p_value == 1.0

    def test_against_high_precision_oracle(self):
        cases = [
            (0.1824, 0.1547, 405, 0.1710, 0.1544, 810),
            (10.0, 2.0, 12, 8.5, 3.5, 40),
            (-1.0, 0.5, 3, 1.0, 4.0, 3),
        ]
        for m1, s1, n1, m2, s2, n2 in cases:
            r = welch_t_from_summary(SummaryStats(m1, s1, n1), SummaryStats(m2, s2, n2))
            want = oracles.welch_p_two_sided(m1, s1, n1, m2, s2, n2)
            assert r.p_value == pytest.approx(want, abs=1e-8)

    def test_antisymmetric_in_groups(self):
        g1, g2 = SummaryStats(5.0, 2.0, 11), SummaryStats(3.0, 4.0, 23)
        fwd = welch_t_from_summary(g1, g2)
        rev = welch_t_from_summary(g2, g1)
        assert fwd.statistic == pytest.approx(-rev.statistic, rel=1e-14)
        assert fwd.p_value == pytest.approx(rev.p_value, abs=1e-14)
        assert fwd.df == pytest.approx(rev.df, rel=1e-14)

    def test_rejects_small_samples(self):
        with pytest.raises(ValidationError):
            SummaryStats(1.0, 1.0, 1)


class TestContingencyTable:
    def test_margins(self):
        t = ContingencyTable(1, 2, 3, 4)
        assert (t.row1, t.row2, t.col1, t.col2, t.total) == (3, 7, 4, 6, 10)

    def test_rejects_negative_and_fractional(self):
        with pytest.raises(ValidationError):
            ContingencyTable(-1, 0, 0, 1)
        with pytest.raises(ValidationError):
            ContingencyTable(1.5, 0, 0, 1)
