import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from closedmax.simplex import (
    EULER_GAMMA,
    ContinuousSimplex,
    DiscreteSimplex,
    continuous_max_moments,
    discrete_max_cdf,
    discrete_max_law,
    gumbel_cdf,
    negbin_centre,
    negbin_local_pmf,
    sample_continuous,
    sample_continuous_max,
    sample_discrete,
)


def brute_states(n, k):
    return [s for s in itertools.product(range(k + 1), repeat=n) if sum(s) == k]


class TestDiscrete:
    def test_cardinality(self):
        assert DiscreteSimplex(3, 4).cardinality == len(brute_states(3, 4)) == 15

    def test_invalid(self):
        with pytest.raises(ValueError):
            DiscreteSimplex(0, 1)
        with pytest.raises(ValueError):
            ContinuousSimplex(0)

    @pytest.mark.parametrize("n, k", [(3, 4), (4, 2), (2, 30)])
    def test_uniform(self, n, k):
        rng = np.random.default_rng(7)
        draws = sample_discrete(DiscreteSimplex(n, k), rng, 60_000)
        states = brute_states(n, k)
        index = {s: i for i, s in enumerate(states)}
        counts = np.bincount([index[tuple(r)] for r in draws], minlength=len(states))
        assert stats.chisquare(counts).pvalue > 1e-4

    @pytest.mark.parametrize("n, k", [(3, 100), (5, 10), (101, 9900), (1, 7), (6, 0)])
    def test_every_subset_route(self, n, k):
        rng = np.random.default_rng(1)
        x = sample_discrete(DiscreteSimplex(n, k), rng, 400)
        assert x.shape == (400, n) and (x >= 0).all() and (x.sum(axis=1) == k).all()
        assert x.mean() == pytest.approx(k / n, rel=0.1, abs=0.1)

    def test_single_draw_shape(self):
        assert sample_discrete(DiscreteSimplex(4, 9), np.random.default_rng(0)).shape == (4,)

    def test_max_cdf_brute(self):
        n, k = 4, 9
        states = brute_states(n, k)
        for j in range(-1, k + 1):
            ref = sum(max(s) <= j for s in states) / len(states)
            assert discrete_max_cdf(DiscreteSimplex(n, k), j) == pytest.approx(ref, abs=1e-12)

    def test_max_law(self):
        law = discrete_max_law(DiscreteSimplex(5, 20))
        assert law.total == pytest.approx(1.0)
        assert law.pmf(3) == 0.0 and law.pmf(20) > 0


class TestContinuous:
    def test_on_simplex(self):
        x = sample_continuous(ContinuousSimplex(5), np.random.default_rng(2), 100)
        assert (x >= 0).all()
        np.testing.assert_allclose(x.sum(axis=1), 1.0)

    def test_moments_frozen(self):
        mean, var = continuous_max_moments(ContinuousSimplex(5))
        assert mean == pytest.approx(0.45666666666666666667, rel=1e-15)
        assert var > 0

    def test_moments_match_draws(self):
        s = ContinuousSimplex(20)
        mx = sample_continuous_max(s, np.random.default_rng(3), 200_000)
        mean, var = continuous_max_moments(s)
        assert mx.mean() == pytest.approx(mean, rel=3e-3)
        assert mx.var() == pytest.approx(var, rel=2e-2)

    def test_chunking_is_invisible(self):
        s = ContinuousSimplex(50)
        a = sample_continuous_max(s, np.random.default_rng(4), 1000, chunk_rows=1000)
        b = sample_continuous_max(s, np.random.default_rng(4), 1000, chunk_rows=1000)
        assert np.array_equal(a, b)

    def test_gumbel_limit_of_mean(self):
        n = 10**6
        mean, _ = continuous_max_moments(ContinuousSimplex(n))
        assert n * mean - math.log(n) == pytest.approx(EULER_GAMMA, abs=1e-5)

    def test_gumbel_cdf(self):
        assert gumbel_cdf(0.0) == pytest.approx(math.exp(-1))
        np.testing.assert_allclose(gumbel_cdf(np.array([-50.0, 50.0])), [0.0, 1.0])


class TestLocalLimit:
    def test_frozen_point(self):
        ll = negbin_local_pmf(10, 0.5, 10)
        assert ll.exact == pytest.approx(0.0880985260009765625, rel=1e-13)
        assert ll.gaussian_estimate == pytest.approx(1 / math.sqrt(2 * math.pi * 10 * 2))

    def test_outside_support(self):
        assert negbin_local_pmf(5, 0.3, -1).exact == 0.0
        with pytest.raises(ValueError):
            negbin_local_pmf(5, 1.0, 1)

    def test_centre(self):
        assert negbin_centre(10**4, 0.5) == 10**4

    @settings(max_examples=25, deadline=None)
    @given(st.integers(1, 60), st.floats(0.05, 0.95))
    def test_pmf_sums_to_one(self, n, p):
        hi = int(n * p / (1 - p) + 40 * math.sqrt(n * p) / (1 - p) + 200)
        tot = math.fsum(negbin_local_pmf(n, p, t).exact for t in range(hi))
        assert tot == pytest.approx(1.0, abs=1e-9)
