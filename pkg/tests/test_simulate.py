import csv
import io
import json
import math

import numpy as np
import pytest

from closedmax import exact, simulate
from closedmax.model import NetworkSpec, Rates, validate

SIX = NetworkSpec.homogeneous(2, 2, 1.0)
GROUPED = NetworkSpec.grouped(6, [(1, 1.0), (2, 2.5)])


def oracle_joint(spec):
    return {s: float(p) for s, p in exact.enumerate_oracle(spec).states.items()}


class TestStreams:
    def test_reproducible(self):
        a = [g.random() for g in simulate.stream_generators(5, 3)]
        b = [g.random() for g in simulate.stream_generators(5, 3)]
        assert a == b and len(set(a)) == 3

    def test_default_seed(self):
        assert simulate.DEFAULT_SEED == 0xC10CED


class TestStationary:
    @pytest.mark.parametrize("spec", [SIX, GROUPED, NetworkSpec.grouped(10, [(2, 0.0), (1, 3.0)])])
    def test_matches_oracle(self, spec):
        batch = simulate.sample_stationary(spec, 200_000, seed=11)
        assert simulate.total_variation(simulate.empirical_joint(batch), oracle_joint(spec)) < 0.01

    def test_workers_do_not_change_output(self):
        a = simulate.sample_stationary(GROUPED, 5000, seed=3, streams=4, workers=1)
        b = simulate.sample_stationary(GROUPED, 5000, seed=3, streams=4, workers=4)
        assert np.array_equal(a.samples, b.samples) and np.array_equal(a.stream_ids, b.stream_ids)

    def test_large_network_max_mean(self):
        spec = NetworkSpec.homogeneous(20_000, 200, 40_000.0)
        batch = simulate.sample_stationary(spec, 4000, seed=1)
        ref = exact.max_law(spec)
        se = math.sqrt(ref.var / 4000)
        assert abs(batch.maxima.mean() - ref.mean) < 5 * se

    def test_csv_layout(self):
        batch = simulate.sample_stationary(GROUPED, 10, seed=2)
        rows = list(csv.reader(io.StringIO(batch.to_csv())))
        assert rows[0] == ["q1", "q2", "q3", "max", "M"]
        for r in rows[1:]:
            q = list(map(int, r[:3]))
            assert int(r[3]) == max(q) and int(r[4]) == 6 - sum(q)

    def test_batch_validates_rows(self):
        with pytest.raises(ValueError):
            simulate.SampleBatch(np.array([[3, 3]]), 0, np.zeros(1, int), "x", SIX)


class TestCtmc:
    def test_config_defaults(self):
        cfg = simulate.CtmcConfig().resolved(4)
        assert cfg.burn_in_events == 10**4 * 5 and cfg.sample_interval_events == 50

    def test_rates_roundtrip(self):
        r = simulate.rates_for(GROUPED)
        spec = validate(NetworkSpec(GROUPED.m, None, Rates(r.lam, r.p, r.mu)))
        assert [c for c, _ in spec.levels] == [c for c, _ in GROUPED.levels]
        assert [k for _, k in spec.levels] == pytest.approx([k for _, k in GROUPED.levels], rel=1e-14)
        assert all(type(k) is float for _, k in spec.levels)

    @pytest.mark.parametrize("spec", [SIX, GROUPED])
    def test_time_average_matches_oracle(self, spec):
        cfg = simulate.CtmcConfig(burn_in_events=10**4, sample_interval_events=2000, replications=1000)
        batch = simulate.simulate_ctmc(spec, cfg, seed=5)
        assert batch.engine == simulate.ENGINE_CTMC
        assert simulate.total_variation(simulate.joint_from_occupancy(batch), oracle_joint(spec)) < 0.02

    def test_workers_do_not_change_output(self):
        cfg = simulate.CtmcConfig(burn_in_events=1000, sample_interval_events=10, replications=300, streams=3)
        a = simulate.simulate_ctmc(GROUPED, cfg, seed=9, workers=1)
        b = simulate.simulate_ctmc(GROUPED, cfg, seed=9, workers=3)
        assert np.array_equal(a.samples, b.samples)

    def test_seed_matters(self):
        cfg = simulate.CtmcConfig(burn_in_events=1000, sample_interval_events=10, replications=200)
        a = simulate.simulate_ctmc(GROUPED, cfg, seed=1)
        b = simulate.simulate_ctmc(GROUPED, cfg, seed=2)
        assert not np.array_equal(a.samples, b.samples)

    def test_mean_max(self):
        spec = NetworkSpec.homogeneous(50, 3, 5.0)
        cfg = simulate.CtmcConfig(burn_in_events=10**4, sample_interval_events=100, replications=20_000)
        batch = simulate.simulate_ctmc(spec, cfg, seed=4)
        st = simulate.extreme_stats(batch)
        assert abs(st.mean - exact.max_law(spec).mean) < 5 * st.mean_stderr


class TestStatistics:
    def test_extreme_stats(self):
        spec = NetworkSpec.homogeneous(10**5, 100, 1e3)
        batch = simulate.sample_stationary(spec, 3000, seed=8)
        st = simulate.extreme_stats(batch)
        assert st.count == 3000 and st.pmf.total == pytest.approx(1.0)
        i0 = int(np.argmin(np.abs(st.gumbel_x)))
        assert st.gumbel_ecdf[i0] == pytest.approx(math.exp(-1), abs=5 * st.gumbel_band[i0] + 0.01)
        d = json.loads(st.to_json())
        assert set(d) >= {"count", "mean", "variance", "max_pmf", "gumbel"}

    def test_rescaling_needs_spare_customers(self):
        batch = simulate.sample_stationary(NetworkSpec.homogeneous(5, 2, 50.0), 50, seed=1)
        with pytest.raises(ValueError):
            simulate.gumbel_rescaled(batch)
        assert np.isnan(simulate.extreme_stats(batch).gumbel_ecdf).all()

    def test_total_variation(self):
        assert simulate.total_variation({1: 0.5, 2: 0.5}, {1: 1.0}) == pytest.approx(0.5)
