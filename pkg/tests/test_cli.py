import csv
import io
import json

import pytest

from closedmax import cli
from closedmax.model import NetworkSpec

SIX = NetworkSpec.homogeneous(2, 2, 1.0).to_json()
BULK = NetworkSpec.homogeneous(10**5, 100, 2e5).to_json()
SMALL = NetworkSpec.grouped(8, [(1, 1.0), (2, 2.0)]).to_json()


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


class TestExamples:
    def test_regime_bulk(self):
        code, out, _ = run("regime", "--spec", BULK)
        d = json.loads(out)
        assert code == 0 and d["regime"] == "GeometricBulk" and d["eta"] == pytest.approx(2.0)

    def test_gumbel_table(self):
        code, out, _ = run("gumbel-table", "--n", "100,1000", "--output", "csv")
        rows = list(csv.DictReader(io.StringIO(out)))
        assert code == 0 and [r["n"] for r in rows] == ["100", "1000"]
        assert float(rows[0]["relative_error_pct"]) == pytest.approx(21.6, abs=0.1)
        assert float(rows[1]["relative_error_pct"]) == pytest.approx(3.7, abs=0.1)

    def test_exact_max_csv(self):
        code, out, _ = run("exact", "--spec", SIX, "--law", "max", "--output", "csv")
        rows = list(csv.DictReader(io.StringIO(out)))
        assert code == 0
        assert [float(r["cdf"]) for r in rows] == pytest.approx([1 / 11, 7 / 11, 1.0], rel=1e-14)


class TestSubcommands:
    def test_spec_file(self, tmp_path):
        p = tmp_path / "spec.json"
        p.write_text(SMALL)
        code, out, _ = run("exact", "--spec", str(p), "--law", "marginal", "--queue", "3")
        d = json.loads(out)
        assert code == 0 and d["queue"] == 3 and sum(d["masses"]) == pytest.approx(1.0)

    def test_exact_total(self):
        code, out, _ = run("exact", "--spec", SMALL, "--law", "total")
        assert code == 0 and json.loads(out)["law"] == "total"

    def test_regime_csv(self):
        code, out, _ = run("regime", "--spec", BULK, "--output", "csv")
        kv = dict(list(csv.reader(io.StringIO(out)))[1:])
        assert code == 0 and kv["regime"] == "GeometricBulk"

    def test_regime_supplied_limits(self):
        code, out, _ = run("regime", "--spec", BULK, "--load", "1.5", "--n-bar", "0.1")
        d = json.loads(out)
        assert d["regime"] == "GeometricProportional" and d["limits"]["source"] == "supplied"

    def test_asymptotic(self):
        code, out, _ = run("asymptotic", "--spec", BULK)
        assert code == 0 and json.loads(out)["predicted_max_location"] > 0

    def test_sample_json_and_csv(self, tmp_path):
        code, out, _ = run("sample", "--spec", SMALL, "--samples", "50", "--summary", str(tmp_path / "s.json"))
        d = json.loads(out)
        assert code == 0 and d["count"] == 50 and d["seed"] == cli.DEFAULT_SEED
        assert json.loads((tmp_path / "s.json").read_text())["count"] == 50
        code, out, _ = run("sample", "--spec", SMALL, "--samples", "5", "--output", "csv")
        rows = list(csv.reader(io.StringIO(out)))
        assert rows[0] == ["q1", "q2", "q3", "max", "M"] and len(rows) == 6

    def test_simulate(self):
        code, out, _ = run("simulate", "--spec", SMALL, "--samples", "100", "--burn-in", "500", "--interval", "20", "--output", "csv")
        assert code == 0 and len(out.strip().splitlines()) == 101

    @pytest.mark.parametrize("cmd", ["sample", "simulate"])
    def test_byte_stable_across_workers(self, cmd):
        base = [cmd, "--spec", SMALL, "--samples", "200", "--streams", "4", "--seed", "77", "--output", "csv"]
        outs = {run(*base, "--workers", w)[1] for w in ("1", "2", "4")}
        outs.add(run(*base)[1])
        assert len(outs) == 1

    def test_validate(self):
        code, out, _ = run("validate")
        d = json.loads(out)
        assert code == 0 and d["all_passed"], d["checks"]


class TestErrors:
    def test_missing_file(self):
        code, _, err = run("exact", "--spec", "/no/such/file.json")
        assert code == 1 and "invalid spec" in err

    def test_bad_inline(self):
        assert run("regime", "--spec", "{not json")[0] == 1
        assert run("regime", "--spec", '{"m": 3, "queues": {"homogeneous": {"n": 0, "kappa": 1}}}')[0] == 1

    def test_near_critical_constant(self):
        spec = NetworkSpec.homogeneous(10**5, 100, 1e5).to_json()
        code, _, err = run("asymptotic", "--spec", spec)
        assert code == 2 and "NearCritical" in err

    def test_unclassified_constant(self):
        spec = NetworkSpec.grouped(10**4, [(1, 3e4), (50, 6e4)]).to_json()
        assert run("asymptotic", "--spec", spec)[0] == 2

    def test_unknown_flag(self):
        with pytest.raises(SystemExit):
            run("regime", "--spec", BULK, "--bogus")

    def test_help_documents_seed(self, capsys):
        with pytest.raises(SystemExit):
            cli.run(["--help"])
        assert "0xc10ced" in capsys.readouterr().out
