import json
import math

import pytest

from closedmax.errors import InvalidSpec
from closedmax.model import (
    Grouped,
    Homogeneous,
    Limits,
    NetworkSpec,
    Rates,
    Regime,
    classify,
    from_dict,
    instance_limits,
    load_spec,
    validate,
)


class TestValidate:
    def test_homogeneous_roundtrip(self):
        s = NetworkSpec.homogeneous(10, 3, 2.5)
        assert s.levels == [(3, 2.5)] and s.is_homogeneous
        assert from_dict(json.loads(s.to_json())) == s

    def test_groups_merge_and_sort(self):
        s = NetworkSpec.grouped(10, [(2, 5.0), (1, 1.0), (3, 5.0)])
        assert s.levels == [(1, 1.0), (5, 5.0)]
        assert s.kappa1 == 1.0 and s.n1 == 1 and s.n == 6

    def test_equal_groups_collapse(self):
        s = NetworkSpec.grouped(10, [(2, 3.0), (4, 3.0)])
        assert isinstance(s.queues, Homogeneous) and s.levels == [(6, 3.0)]

    def test_rates_give_kappa(self):
        # kappa = mu / (p lambda)
        s = validate(NetworkSpec(5, None, Rates(2.0, (0.5, 0.5), (3.0, 1.0))))
        assert s.levels == [(1, 1.0), (1, 3.0)]
        assert s.rates.mu == (1.0, 3.0)

    def test_rates_must_match_queues(self):
        with pytest.raises(InvalidSpec):
            validate(NetworkSpec(5, Homogeneous(2, 7.0), Rates(1.0, (0.5, 0.5), (1.0, 1.0))))

    @pytest.mark.parametrize(
        "doc",
        [
            {"queues": {"homogeneous": {"n": 2, "kappa": 1}}},
            {"m": 0, "queues": {"homogeneous": {"n": 2, "kappa": 1}}},
            {"m": 3, "queues": {"homogeneous": {"n": 2, "kappa": -1}}},
            {"m": 3, "queues": {"homogeneous": {"n": 2.5, "kappa": 1}}},
            {"m": 3, "queues": {"groups": []}},
            {"m": 3, "queues": {"bogus": 1}},
            {"m": 3},
            {"m": 3, "rates": {"lambda": 1, "p": [0.3, 0.3], "mu": [1, 1]}},
            {"m": 3, "rates": {"lambda": 1, "p": [1.0], "mu": [0]}},
            {"m": 3, "rates": {"lambda": 1}},
        ],
    )
    def test_invalid(self, doc):
        with pytest.raises(InvalidSpec):
            from_dict(doc)

    def test_problems_listed(self):
        with pytest.raises(InvalidSpec) as e:
            from_dict({"m": -1, "queues": {"homogeneous": {"n": 0, "kappa": 1}}})
        assert len(e.value.problems) >= 2

    def test_load_spec(self, tmp_path):
        p = tmp_path / "s.json"
        p.write_text(NetworkSpec.grouped(4, [(1, 1.0), (2, 2.0)]).to_json())
        assert load_spec(p).levels == [(1, 1.0), (2, 2.0)]
        p.write_text("{nope")
        with pytest.raises(InvalidSpec):
            load_spec(p)

    def test_derived_quantities(self):
        s = NetworkSpec.grouped(100, [(10, 5.0), (10, 10.0)])
        assert s.level_ratios() == [1.0, 0.5]
        assert s.mean_nonbottleneck() == pytest.approx(10.0)
        assert s.centred_load() == pytest.approx(100 - 5 - 10)


class TestClassify:
    def test_bulk(self):
        rep = classify(NetworkSpec.homogeneous(10**5, 100, 2e5))
        assert rep.regime is Regime.GEOMETRIC_BULK
        assert rep.eta == pytest.approx(2.0) and rep.zeta == pytest.approx(1.0)
        assert rep.warnings == []

    def test_proportional(self):
        rep = classify(NetworkSpec.homogeneous(1000, 100, 2000.0))
        assert rep.regime is Regime.GEOMETRIC_PROPORTIONAL
        # eta^2 - eta (n_bar + kappa_bar + 1) + kappa_bar = 0 with n_bar = 0.1, kappa_bar = 2
        b = 3.1
        assert rep.eta == pytest.approx((b + math.sqrt(b * b - 8)) / 2, rel=1e-12)
        assert rep.zeta == pytest.approx(1 / (rep.eta - 1), rel=1e-12)

    def test_near_critical(self):
        rep = classify(NetworkSpec.homogeneous(10**5, 100, 1.02e5))
        assert rep.regime is Regime.NEAR_CRITICAL and rep.eta is None and rep.warnings

    def test_simplex(self):
        rep = classify(NetworkSpec.homogeneous(10**5, 100, 1e4))
        assert rep.regime is Regime.SIMPLEX_LIMIT and rep.zeta == pytest.approx(0.1)

    def test_simplex_warns_on_small_m(self):
        rep = classify(NetworkSpec.homogeneous(100, 10, 5.0), Limits(0.05, 0.0))
        assert rep.regime is Regime.SIMPLEX_LIMIT and rep.limits_source == "supplied"
        assert any("m >> n" in w for w in rep.warnings)

    def test_single_bottleneck_queue_unclassified(self):
        rep = classify(NetworkSpec.grouped(10**4, [(1, 3e4), (50, 6e4)]))
        assert rep.regime is Regime.UNCLASSIFIED and rep.theorem is None

    def test_grouped_eta_solves_root_equation(self):
        m = 10**5
        rep = classify(NetworkSpec.grouped(m, [(1000, 1.99 * m), (1000, 3.98 * m)]))
        eta = rep.eta
        # kappa_bar1/eta + f r/(eta - r) = 1 with f = 0.01, r = 0.5
        assert 1.99 / eta + 0.01 * 0.5 / (eta - 0.5) == pytest.approx(1.0, abs=1e-13)

    def test_band_validation(self):
        with pytest.raises(ValueError):
            classify(NetworkSpec.homogeneous(10, 2, 1.0), band=0.7)

    def test_instance_limits(self):
        assert instance_limits(NetworkSpec.homogeneous(3000, 100, 6000.0)) == Limits(2.0, 0.0)
        assert instance_limits(NetworkSpec.homogeneous(2000, 100, 4000.0)).n_bar == pytest.approx(0.05)

    def test_report_dict(self):
        d = classify(NetworkSpec.homogeneous(10**5, 100, 2e5)).to_dict()
        assert d["regime"] == "GeometricBulk" and d["limits"]["source"] == "instance"
        json.dumps(d)


def test_grouped_type():
    assert isinstance(NetworkSpec.grouped(3, [(1, 1.0), (1, 2.0)]).queues, Grouped)
