"""Command-line entry point: ``closedmax <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

from . import asymptotics, exact, simulate
from .errors import ClosedMaxError, InvalidSpec, NearCritical, NumericError
from .model import Limits, NetworkSpec, Regime, classify, from_dict, load_spec
from .simulate import DEFAULT_SEED

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2


def _spec_arg(text: str) -> NetworkSpec:
    """A spec file path, or an inline JSON object."""
    if text.lstrip().startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidSpec([("spec", f"inline spec is not JSON: {exc}")]) from exc
        return from_dict(doc)
    if not Path(text).is_file():
        raise InvalidSpec([("spec", f"no such file: {text}")])
    return load_spec(text)


def _int_list(text: str) -> list[int]:
    try:
        out = [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc
    if not out or min(out) < 1:
        raise argparse.ArgumentTypeError("need at least one positive integer")
    return out


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _emit_json(obj, out) -> None:
    out.write(json.dumps(obj, indent=2) + "\n")


def _emit_rows(header, rows, out) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(r)


def _emit_kv(d: dict, out, prefix: str = "") -> None:
    rows = []

    def walk(p, v):
        if isinstance(v, dict):
            for k, x in v.items():
                walk(f"{p}.{k}" if p else k, x)
        elif isinstance(v, list):
            rows.append((p, ";".join(map(str, v))))
        else:
            rows.append((p, "" if v is None else v))

    walk(prefix, d)
    _emit_rows(["key", "value"], rows, out)


# ------------------------------------------------------ commands


def cmd_regime(args, out) -> int:
    ratios = None
    if args.load is not None:
        ratios = Limits(args.load, args.n_bar or 0.0)
    rep = classify(args.spec, ratios, args.band)
    d = rep.to_dict()
    if args.output == "csv":
        _emit_kv(d, out)
    else:
        _emit_json(d, out)
    return EXIT_OK


def cmd_exact(args, out) -> int:
    spec = args.spec
    if args.law == "max":
        pmf, label = exact.max_law(spec), "max queue length"
    elif args.law == "total":
        pmf, label = exact.total_population_law(spec), "customers in queues"
    else:
        pmf, label = exact.marginal_law(spec, args.queue - 1), f"length of queue {args.queue}"
    if args.output == "csv":
        out.write(pmf.to_csv(trim=args.trim))
    else:
        d = {"law": args.law, "mean": pmf.mean, "variance": pmf.var, "median": pmf.median(), **pmf.to_dict()}
        if args.law == "marginal":
            d["queue"] = args.queue
        _emit_json(d, out)
    if args.plot:
        from . import plotting

        plotting.plot_pmf(pmf, args.plot, title=f"{args.law} law", xlabel=label)
    return EXIT_OK


def _batch_output(args, batch, out, reference=None) -> int:
    summary = simulate.extreme_stats(batch)
    if args.output == "csv":
        out.write(batch.to_csv())
    else:
        d = {"engine": batch.engine, "seed": batch.seed, "streams": int(batch.stream_ids.max()) + 1 if batch.stream_ids.size else 0}
        d.update(summary.to_dict())
        _emit_json(d, out)
    if args.summary:
        Path(args.summary).write_text(summary.to_json() + "\n")
    if args.plot:
        from . import plotting

        plotting.plot_max_samples(summary, args.plot, reference=reference, title=batch.engine)
    return EXIT_OK


def cmd_sample(args, out) -> int:
    batch = simulate.sample_stationary(args.spec, args.samples, seed=args.seed, streams=args.streams, workers=args.workers)
    ref = exact.max_law(args.spec) if args.plot else None
    return _batch_output(args, batch, out, ref)


def cmd_simulate(args, out) -> int:
    cfg = simulate.CtmcConfig(args.burn_in, args.interval, args.samples, args.streams)
    batch = simulate.simulate_ctmc(args.spec, cfg, seed=args.seed, workers=args.workers)
    return _batch_output(args, batch, out)


def cmd_asymptotic(args, out) -> int:
    ratios = Limits(args.load, args.n_bar or 0.0) if args.load is not None else None
    rep = asymptotics.asymptotic_report(args.spec, args.band, ratios)
    if rep["regime"] == Regime.NEAR_CRITICAL.value:
        raise NearCritical("; ".join(rep["warnings"]) or "near-critical load")
    if rep["regime"] == Regime.UNCLASSIFIED.value:
        raise NumericError("; ".join(rep["warnings"]) or "no limit theorem applies")
    if args.output == "csv":
        _emit_kv(rep, out)
    else:
        _emit_json(rep, out)
    return EXIT_OK


def gumbel_table_rows(ns) -> list[dict]:
    rows = []
    for n in ns:
        v, rel = asymptotics.variance_deficit(n)
        rows.append({"n": n, "scaled_variance": v, "variance_ratio": v / (math.pi**2 / 6), "relative_error_pct": 100 * rel})
    return rows


def cmd_gumbel_table(args, out) -> int:
    rows = gumbel_table_rows(args.n)
    if args.output == "csv":
        _emit_rows(
            ["n", "scaled_variance", "variance_ratio", "relative_error_pct"],
            [[r["n"], repr(r["scaled_variance"]), repr(r["variance_ratio"]), f"{r['relative_error_pct']:.4f}"] for r in rows],
            out,
        )
    else:
        _emit_json({"limit": math.pi**2 / 6, "rows": rows}, out)
    if args.plot:
        from . import plotting

        plotting.plot_gumbel_table(rows, args.plot)
    return EXIT_OK


VALIDATION_SUITE = (
    NetworkSpec.homogeneous(2, 2, 1.0),
    NetworkSpec.homogeneous(1, 1, 1.0),
    NetworkSpec.grouped(1, [(1, 1.0), (1, 2.0)]),
    NetworkSpec.homogeneous(6, 3, 2.5),
    NetworkSpec.grouped(5, [(2, 1.0), (1, 3.0)]),
)


def iid_tv_noise(probs, samples: int) -> float:
    """Expected total variation of an empirical law from ``samples`` i.i.d. draws."""
    return math.fsum(math.sqrt(p * (1 - p) / (2 * math.pi * samples)) for p in probs)


def validation_checks(samples: int, seed: int, events: int):
    """Yield ``(name, value, tolerance)`` for the built-in cross-check suite.

    Sampler checks pass at total variation 0.01, widened to four times the
    expected sampling noise when ``samples`` is too small for that.
    """
    for i, spec in enumerate(VALIDATION_SUITE):
        tag = f"spec{i}(m={spec.m},levels={spec.levels})"
        orc = exact.enumerate_oracle(spec)
        pairs = (
            (exact.max_law(spec), orc.max_law()),
            (exact.total_population_law(spec), orc.total_population_law()),
            (exact.marginal_law(spec, 0), orc.marginal_law(0)),
        )
        err = max(abs(pmf.pmf(x) - float(q)) for pmf, ref in pairs for x, q in enumerate(ref))
        yield f"{tag} exact-vs-oracle", err, 1e-9
        truth = {s: float(p) for s, p in orc.states.items()}
        batch = simulate.sample_stationary(spec, samples, seed=seed)
        tol = max(0.01, 4 * iid_tv_noise(truth.values(), samples))
        yield f"{tag} stationary-sampler TV", simulate.total_variation(simulate.empirical_joint(batch), truth), tol
        cfg = simulate.CtmcConfig(burn_in_events=10_000, sample_interval_events=max(1, events // 1000), replications=1000)
        ct = simulate.simulate_ctmc(spec, cfg, seed=seed)
        yield f"{tag} ctmc TV", simulate.total_variation(simulate.joint_from_occupancy(ct), truth), 0.01


def cmd_validate(args, out) -> int:
    rows = [(name, val, tol, val <= tol) for name, val, tol in validation_checks(args.samples, args.seed, args.events)]
    if args.output == "csv":
        _emit_rows(["check", "value", "tolerance", "passed"], [[a, repr(b), c, d] for a, b, c, d in rows], out)
    else:
        _emit_json(
            {"all_passed": all(r[3] for r in rows), "checks": [{"check": a, "value": b, "tolerance": c, "passed": d} for a, b, c, d in rows]},
            out,
        )
    return EXIT_OK


# -------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="closedmax",
        description="Maximum queue length in a closed network of one infinite-server hub and n single-server queues.",
        epilog=f"Exit codes: 0 ok, 1 invalid spec, 2 numerical failure. Default seed: {DEFAULT_SEED:#x} ({DEFAULT_SEED}).",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, spec=True, output_default="json"):
        if spec:
            sp.add_argument("--spec", required=True, type=str, help="spec JSON file, or an inline JSON object")
        sp.add_argument("--output", choices=("json", "csv"), default=output_default)

    def ratios(sp):
        sp.add_argument("--band", type=float, default=0.05, help="near-critical half-width (default 0.05)")
        sp.add_argument("--load", type=float, default=None, help="limit load ratio; default: read off the instance")
        sp.add_argument("--n-bar", type=float, default=None, help="limit queues/customers ratio (with --load)")

    sp = sub.add_parser("regime", help="classify the operating regime")
    common(sp)
    ratios(sp)
    sp.set_defaults(func=cmd_regime)

    sp = sub.add_parser("exact", help="exact law of the maximum, a marginal or the queued total")
    common(sp)
    sp.add_argument("--law", choices=("max", "marginal", "total"), default="max")
    sp.add_argument("--queue", type=int, default=1, help="queue number for --law marginal (1-based)")
    sp.add_argument("--trim", type=float, default=0.0, help="drop CSV rows with mass <= trim at both ends")
    sp.add_argument("--plot", default=None, metavar="PATH", help="also render the law to an image (needs matplotlib)")
    sp.set_defaults(func=cmd_exact)

    for name, func, help_ in (
        ("sample", cmd_sample, "exact i.i.d. stationary draws"),
        ("simulate", cmd_simulate, "dynamic (CTMC) simulation"),
    ):
        sp = sub.add_parser(name, help=help_)
        common(sp)
        sp.add_argument("--seed", type=_u64, default=DEFAULT_SEED, help=f"RNG seed (default {DEFAULT_SEED:#x})")
        sp.add_argument("--samples", type=int, default=1000, help="rows to produce")
        sp.add_argument("--streams", type=int, default=1, help="independent RNG streams (fixes the output)")
        sp.add_argument("--workers", type=int, default=1, help="threads (never changes the output)")
        sp.add_argument("--summary", default=None, metavar="PATH", help="also write the summary JSON here")
        sp.add_argument("--plot", default=None, metavar="PATH")
        if name == "simulate":
            sp.add_argument("--burn-in", type=int, default=None, help="events discarded first (default 10^4 (n+1))")
            sp.add_argument("--interval", type=int, default=None, help="events between rows (default 10 (n+1))")
        sp.set_defaults(func=func)

    sp = sub.add_parser("asymptotic", help="limit constants and first-order predictions")
    common(sp)
    ratios(sp)
    sp.set_defaults(func=cmd_asymptotic)

    sp = sub.add_parser("validate", help="cross-check exact laws and both samplers on small networks")
    common(sp, spec=False)
    sp.add_argument("--seed", type=_u64, default=DEFAULT_SEED)
    sp.add_argument("--samples", type=int, default=1_000_000, help="stationary draws per network")
    sp.add_argument("--events", type=int, default=10_000_000, help="CTMC events per network")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("gumbel-table", help="finite-n variance of the unit-simplex maximum vs its Gumbel limit")
    common(sp, spec=False)
    sp.add_argument("--n", type=_int_list, default=[10, 100, 1000, 10000], help="comma-separated n values")
    sp.add_argument("--plot", default=None, metavar="PATH")
    sp.set_defaults(func=cmd_gumbel_table)
    return p


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "spec", None) is not None:
            args.spec = _spec_arg(args.spec)
        buf = io.StringIO()
        code = args.func(args, buf)
        out.write(buf.getvalue())
        return code
    except InvalidSpec as exc:
        err.write(f"invalid spec: {exc}\n")
        return EXIT_INVALID
    except NumericError as exc:
        err.write(f"numerical failure ({type(exc).__name__}): {exc}\n")
        return EXIT_NUMERIC
    except ClosedMaxError as exc:  # pragma: no cover - every error subclasses one of the above
        err.write(f"error: {exc}\n")
        return EXIT_NUMERIC


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
