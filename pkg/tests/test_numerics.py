import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from closedmax.errors import NoAdmissibleRoot, NoSignChange, UnboundedSupremumWarning
from closedmax.numerics import (
    LogWeight,
    find_root_monotone,
    harmonic,
    legendre_fenchel,
    log_binom,
    log_falling_factorial,
    log_falling_factorial_array,
    log_gamma_diff,
    log_sum_exp,
    log_sum_exp_array,
    solve_quadratic_positive,
)


class TestLogWeight:
    def test_zero_and_one(self):
        assert LogWeight.zero().is_zero
        assert LogWeight.one().value == 1.0
        assert LogWeight.from_value(0.0).is_zero

    def test_arithmetic(self):
        a, b = LogWeight.from_value(3.0), LogWeight.from_value(4.0)
        assert (a * b).value == pytest.approx(12.0)
        assert (b / a).value == pytest.approx(4 / 3)
        assert (a + b).value == pytest.approx(7.0)
        assert (a**2).value == pytest.approx(9.0)
        assert (a * LogWeight.zero()).is_zero

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            LogWeight.from_value(-1.0)

    def test_divide_by_zero(self):
        with pytest.raises(ZeroDivisionError):
            LogWeight.one() / LogWeight.zero()


class TestLogSumExp:
    def test_far_apart_terms(self):
        out = log_sum_exp([LogWeight(1000.0), LogWeight(0.0)])
        assert out.log_value == pytest.approx(1000.0)

    def test_all_zero_terms(self):
        assert log_sum_exp_array(np.full(3, -np.inf)) == -math.inf
        assert log_sum_exp_array(np.array([])) == -math.inf

    def test_axis(self):
        x = np.log(np.array([[1.0, 2.0], [3.0, 4.0]]))
        np.testing.assert_allclose(np.exp(log_sum_exp_array(x, axis=1)), [3.0, 7.0])
        out = log_sum_exp_array(np.array([[-np.inf, -np.inf], [0.0, 0.0]]), axis=1)
        assert out[0] == -np.inf and out[1] == pytest.approx(math.log(2))

    @given(st.lists(st.floats(-700, 700), min_size=1, max_size=30))
    def test_bounds(self, xs):
        v = log_sum_exp_array(np.array(xs))
        assert max(xs) - 1e-12 <= v <= max(xs) + math.log(len(xs)) + 1e-9


class TestGammaHelpers:
    def test_falling_factorial_small(self):
        assert log_falling_factorial(10, 3).value == pytest.approx(720.0)
        assert log_falling_factorial(5, 0).value == 1.0
        assert log_falling_factorial(3, 4).is_zero

    def test_falling_factorial_array(self):
        got = np.exp(log_falling_factorial_array(6.0, np.arange(4)))
        np.testing.assert_allclose(got, [1, 6, 30, 120])

    def test_gamma_diff_large_argument(self):
        # ln Gamma(x+h) - ln Gamma(x) ~ h ln x for x >> h
        x, h = 1e15, 3.0
        assert float(log_gamma_diff(x, h)) == pytest.approx(h * math.log(x) + h * (h - 1) / (2 * x), rel=1e-14)

    def test_binom(self):
        assert math.exp(float(log_binom(30, 10))) == pytest.approx(math.comb(30, 10), rel=1e-12)

    def test_harmonic(self):
        assert harmonic(100) == pytest.approx(5.1873775176396202608, rel=1e-15)
        assert harmonic(100, 2) == pytest.approx(1.6349839001848928651, rel=1e-15)
        with pytest.raises(ValueError):
            harmonic(0)


class TestRoots:
    def test_quadratic_selects_root_above_bound(self):
        r = solve_quadratic_positive(1.0, -4.0, 2.0, 1.0)
        assert r.selected == pytest.approx(3.4142135623730950488, rel=1e-15)
        assert r.residual(r.selected) == pytest.approx(0.0, abs=1e-14)

    def test_quadratic_no_root(self):
        with pytest.raises(NoAdmissibleRoot):
            solve_quadratic_positive(1.0, 0.0, 1.0, 0.0)

    def test_quadratic_cancellation_free(self):
        r = solve_quadratic_positive(1.0, -1e8, 1.0, 1.0)
        assert r.selected == pytest.approx(1e8, rel=1e-15)
        assert min(r.roots) == pytest.approx(1e-8, rel=1e-14)

    def test_monotone_root(self):
        assert find_root_monotone(lambda x: x**3 - 2, (0.0, 2.0)) == pytest.approx(2 ** (1 / 3), abs=1e-10)
        assert find_root_monotone(lambda x: 1 - x, (0.0, 5.0)) == pytest.approx(1.0, abs=1e-10)

    def test_monotone_root_needs_sign_change(self):
        with pytest.raises(NoSignChange):
            find_root_monotone(lambda x: x + 1, (0.0, 1.0))


class TestLegendreFenchel:
    def test_poisson_rate(self):
        # log E exp(-theta P) for P ~ Poisson(1): rate at x < 1 is x ln x - x + 1
        lm = lambda th: math.expm1(-th)
        for x in (0.2, 0.5, 0.9):
            assert legendre_fenchel(lm, x) == pytest.approx(x * math.log(x) - x + 1, abs=1e-9)

    def test_zero_above_mean(self):
        assert legendre_fenchel(lambda th: math.expm1(-th), 1.5) == 0.0

    def test_cap_warning(self):
        with warnings.catch_warnings(record=True) as w:
            warnings.simplefilter("always")
            legendre_fenchel(lambda th: math.expm1(-th), 0.0)
        assert any(issubclass(x.category, UnboundedSupremumWarning) for x in w)
