"""Network description, validation, JSON I/O and regime classification."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from . import asymptotics
from .errors import InvalidSpec, NoSignChange

NEAR_CRITICAL_BAND = 0.05
# "m >> n >> 1" made concrete; only ever reported as warnings
MIN_QUEUES = 30
MIN_SEPARATION = 30
_REL_TOL = 1e-12


@dataclass(frozen=True)
class Homogeneous:
    n: int
    kappa: float


@dataclass(frozen=True)
class Group:
    count: int
    kappa: float


@dataclass(frozen=True)
class Grouped:
    groups: tuple[Group, ...]


@dataclass(frozen=True)
class Rates:
    lam: float
    p: tuple[float, ...]
    mu: tuple[float, ...]

    def kappas(self) -> np.ndarray:
        # queue i carries weight (p_i lambda / mu_i)^l relative to the hub,
        # and the product form writes that weight as kappa_i^-l
        return np.asarray(self.mu) / (np.asarray(self.p) * self.lam)


Queues = Union[Homogeneous, Grouped]


@dataclass(frozen=True)
class NetworkSpec:
    """Closed network: ``m`` customers, one infinite-server hub, single-server queues.

    ``kappa`` is the inverse relative utilisation ``mu_i / (p_i lambda)``;
    smaller ``kappa`` means a busier queue.  After :func:`validate` the
    queues are ordered by increasing ``kappa`` and ``rates`` (if any)
    follows that order.
    """

    m: int
    queues: Queues | None = None
    rates: Rates | None = None

    @property
    def levels(self) -> list[tuple[int, float]]:
        """``[(count, kappa), ...]`` with the bottleneck level first."""
        q = self.queues
        if isinstance(q, Homogeneous):
            return [(q.n, q.kappa)]
        if isinstance(q, Grouped):
            return [(g.count, g.kappa) for g in q.groups]
        raise InvalidSpec([("queues", "spec has not been validated")])

    @property
    def n(self) -> int:
        return sum(c for c, _ in self.levels)

    @property
    def n1(self) -> int:
        return self.levels[0][0]

    @property
    def kappa1(self) -> float:
        return self.levels[0][1]

    @property
    def is_homogeneous(self) -> bool:
        return isinstance(self.queues, Homogeneous)

    def level_ratios(self) -> list[float]:
        """``kappa_1 / kappa_j`` per level (1 for the bottleneck)."""
        k1 = self.kappa1
        return [1.0 if i == 0 else (k1 / k if k > 0 else 0.0) for i, (_, k) in enumerate(self.levels)]

    def queue_kappas(self) -> np.ndarray:
        return np.concatenate([np.full(c, k, dtype=float) for c, k in self.levels])

    def mean_nonbottleneck(self) -> float:
        """Mean total of the independent geometric non-bottleneck queues."""
        total = 0.0
        for (c, _), r in list(zip(self.levels, self.level_ratios()))[1:]:
            total += c * r / (1.0 - r)
        return total

    def centred_load(self) -> float:
        """``m - E[hub] - E[non-bottleneck queues]``, the simplex-regime scale."""
        return self.m - self.kappa1 - self.mean_nonbottleneck()

    def to_dict(self) -> dict:
        out: dict = {"m": self.m}
        q = self.queues
        if isinstance(q, Homogeneous):
            out["queues"] = {"homogeneous": {"n": q.n, "kappa": q.kappa}}
        elif isinstance(q, Grouped):
            out["queues"] = {"groups": [{"count": g.count, "kappa": g.kappa} for g in q.groups]}
        if self.rates is not None:
            out["rates"] = {"lambda": self.rates.lam, "p": list(self.rates.p), "mu": list(self.rates.mu)}
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def homogeneous(cls, m: int, n: int, kappa: float) -> "NetworkSpec":
        return validate(cls(m, Homogeneous(n, kappa)))

    @classmethod
    def grouped(cls, m: int, groups) -> "NetworkSpec":
        return validate(cls(m, Grouped(tuple(Group(int(c), float(k)) for c, k in groups))))


def from_dict(doc: dict) -> NetworkSpec:
    problems = []
    if "m" not in doc:
        problems.append(("m", "missing"))
    queues = None
    qdoc = doc.get("queues")
    if qdoc is not None:
        if "homogeneous" in qdoc:
            h = qdoc["homogeneous"]
            queues = Homogeneous(h.get("n"), h.get("kappa"))
        elif "groups" in qdoc:
            queues = Grouped(tuple(Group(g.get("count"), g.get("kappa")) for g in qdoc["groups"]))
        else:
            problems.append(("queues", "expected 'homogeneous' or 'groups'"))
    rates = None
    if "rates" in doc:
        r = doc["rates"]
        try:
            rates = Rates(float(r["lambda"]), tuple(map(float, r["p"])), tuple(map(float, r["mu"])))
        except (KeyError, TypeError, ValueError) as exc:
            problems.append(("rates", f"malformed ({exc})"))
    if problems:
        raise InvalidSpec(problems)
    return validate(NetworkSpec(doc["m"], queues, rates))


def load_spec(path: str | Path) -> NetworkSpec:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidSpec([("file", f"not valid JSON: {exc}")]) from exc
    if not isinstance(doc, dict):
        raise InvalidSpec([("file", "top level must be an object")])
    return from_dict(doc)


def _is_pos_int(x) -> bool:
    return isinstance(x, (int, np.integer)) and not isinstance(x, bool) and x > 0


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= _REL_TOL * max(abs(a), abs(b), 1e-300)


def validate(spec: NetworkSpec) -> NetworkSpec:
    """Check a spec and return its normal form.

    Rate form is collapsed to per-queue ``kappa``; queues with equal
    ``kappa`` are merged into one level; levels are sorted by increasing
    ``kappa``; a single level becomes :class:`Homogeneous`.
    """
    problems: list[tuple[str, str]] = []
    if not _is_pos_int(spec.m):
        problems.append(("m", f"must be a positive integer, got {spec.m!r}"))

    per_queue: list[float] | None = None
    if spec.queues is not None:
        q = spec.queues
        if isinstance(q, Homogeneous):
            if not _is_pos_int(q.n):
                problems.append(("queues.homogeneous.n", f"must be a positive integer, got {q.n!r}"))
            if not isinstance(q.kappa, (int, float)) or not math.isfinite(q.kappa) or q.kappa < 0:
                problems.append(("queues.homogeneous.kappa", f"must be a finite nonnegative number, got {q.kappa!r}"))
            if not problems:
                per_queue = [float(q.kappa)] * int(q.n)
        else:
            if not q.groups:
                problems.append(("queues.groups", "empty"))
            for i, g in enumerate(q.groups):
                if not _is_pos_int(g.count):
                    problems.append((f"queues.groups[{i}].count", f"must be a positive integer, got {g.count!r}"))
                if not isinstance(g.kappa, (int, float)) or not math.isfinite(g.kappa) or g.kappa < 0:
                    problems.append((f"queues.groups[{i}].kappa", f"must be a finite nonnegative number, got {g.kappa!r}"))
            if not problems:
                per_queue = [float(g.kappa) for g in q.groups for _ in range(int(g.count))]

    rates = spec.rates
    if rates is not None:
        p, mu = np.asarray(rates.p, dtype=float), np.asarray(rates.mu, dtype=float)
        if p.size == 0:
            problems.append(("rates.p", "empty"))
        if p.shape != mu.shape:
            problems.append(("rates", f"p has {p.size} entries but mu has {mu.size}"))
        if not (math.isfinite(rates.lam) and rates.lam > 0):
            problems.append(("rates.lambda", "must be positive"))
        if np.any(~np.isfinite(p)) or np.any(p <= 0):
            problems.append(("rates.p", "all routing probabilities must be positive"))
        elif abs(math.fsum(p) - 1.0) > 1e-12:
            problems.append(("rates.p", f"probabilities sum to {math.fsum(p)!r}, not 1"))
        if np.any(~np.isfinite(mu)) or np.any(mu <= 0):
            problems.append(("rates.mu", "all service rates must be positive"))
        if not problems:
            derived = [float(x) for x in rates.kappas()]
            if per_queue is not None:
                if len(per_queue) != len(derived):
                    problems.append(("rates", f"{len(derived)} queues in rate form but {len(per_queue)} in queues"))
                elif not all(_close(a, b) for a, b in zip(sorted(per_queue), sorted(derived))):
                    problems.append(("rates", "derived kappa = mu/(p*lambda) disagrees with explicit kappa"))
            per_queue = derived
    if per_queue is None and not problems:
        problems.append(("queues", "either queues or rates must be given"))
    if problems:
        raise InvalidSpec(problems)

    order = np.argsort(np.asarray(per_queue), kind="stable")
    levels: list[list] = []
    for idx in order:
        k = per_queue[idx]
        if levels and _close(levels[-1][1], k):
            levels[-1][0] += 1
        else:
            levels.append([1, k])
    if len(levels) == 1:
        queues: Queues = Homogeneous(levels[0][0], levels[0][1])
    else:
        queues = Grouped(tuple(Group(c, k) for c, k in levels))
    if rates is not None:
        rates = Rates(float(rates.lam), tuple(float(rates.p[i]) for i in order), tuple(float(rates.mu[i]) for i in order))
    return NetworkSpec(int(spec.m), queues, rates)


class Regime(str, enum.Enum):
    GEOMETRIC_BULK = "GeometricBulk"
    GEOMETRIC_PROPORTIONAL = "GeometricProportional"
    SIMPLEX_LIMIT = "SimplexLimit"
    NEAR_CRITICAL = "NearCritical"
    UNCLASSIFIED = "Unclassified"


THEOREM_REGIMES = (Regime.GEOMETRIC_BULK, Regime.GEOMETRIC_PROPORTIONAL, Regime.SIMPLEX_LIMIT)


@dataclass(frozen=True)
class Limits:
    """Limit ratios: ``load`` is kappa/m (or (kappa_1 + E|L|)/m), ``n_bar`` is n/m (or n_1/m)."""

    load: float
    n_bar: float = 0.0


@dataclass
class RegimeReport:
    regime: Regime
    limits: Limits
    limits_source: str
    zeta: float | None = None
    eta: float | None = None
    theorem: str | None = None
    warnings: list[str] = field(default_factory=list)

    @property
    def constants(self) -> tuple[float | None, float | None] | None:
        if self.regime not in THEOREM_REGIMES:
            return None
        return (self.zeta, self.eta)

    def to_dict(self) -> dict:
        return {
            "regime": self.regime.value,
            "limits": {"load": self.limits.load, "n_bar": self.limits.n_bar, "source": self.limits_source},
            "theorem": self.theorem,
            "zeta": self.zeta,
            "eta": self.eta,
            "warnings": list(self.warnings),
        }


def instance_limits(spec: NetworkSpec) -> Limits:
    """Limit ratios read off a finite instance.

    ``n_bar`` is reported as 0 once ``m >= 30 n_1``, i.e. when the
    instance sits in the ``m >> n`` corner rather than the proportional one.
    """
    load = (spec.kappa1 + spec.mean_nonbottleneck()) / spec.m
    n1 = spec.n1
    n_bar = 0.0 if spec.m >= MIN_SEPARATION * n1 else n1 / spec.m
    return Limits(load, n_bar)


def log_mgf_for(spec: NetworkSpec, load: float | None = None) -> "asymptotics.LogMgf":
    """Limiting log-MGF of hub plus non-bottleneck queues, built from the instance.

    With ``load`` given, the hub share is adjusted so the total mean matches it.
    """
    ratios = spec.level_ratios()
    lv = [(c / spec.m, r) for (c, _), r in list(zip(spec.levels, ratios))[1:]]
    k1 = spec.kappa1 / spec.m
    if load is not None:
        lbar = sum(f * r / (1 - r) for f, r in lv)
        k1 = max(load - lbar, 0.0)
    return asymptotics.LogMgf(k1, lv)


def classify(spec: NetworkSpec, ratios: Limits | None = None, band: float = NEAR_CRITICAL_BAND) -> RegimeReport:
    """Place an instance (or its declared limit) in one of the operating regimes."""
    if not 0 < band < 0.5:
        raise ValueError("band must lie in (0, 0.5)")
    source = "supplied" if ratios is not None else "instance"
    lim = ratios if ratios is not None else instance_limits(spec)
    if not (math.isfinite(lim.load) and math.isfinite(lim.n_bar)) or lim.load < 0 or lim.n_bar < 0:
        raise ValueError("limit ratios must be finite and nonnegative")
    rep = RegimeReport(Regime.UNCLASSIFIED, lim, source)
    n1, m = spec.n1, spec.m
    grouped = not spec.is_homogeneous
    margin = lim.load - 1.0

    if lim.n_bar > 0:
        rep.regime = Regime.GEOMETRIC_PROPORTIONAL
        rep.theorem = "non-homogeneous geometric, proportional queues" if grouped else "geometric, proportional queues"
    elif abs(margin) <= band:
        rep.regime = Regime.NEAR_CRITICAL
        rep.warnings.append(f"load ratio {lim.load:.6g} within {band} of 1; no limit theorem covers it")
        return rep
    elif margin > band:
        rep.regime = Regime.GEOMETRIC_BULK
        rep.theorem = "non-homogeneous geometric, customer-pool bottleneck" if grouped else "geometric, customer-pool bottleneck"
    else:
        rep.regime = Regime.SIMPLEX_LIMIT
        rep.theorem = "non-homogeneous simplex limit" if grouped else "continuous simplex limit"
        rep.zeta = lim.load
        if m < MIN_SEPARATION * n1:
            rep.warnings.append(f"m >> n not met: m={m} < {MIN_SEPARATION}*n1={MIN_SEPARATION * n1}")
        return rep

    if n1 < 2:
        rep.regime = Regime.UNCLASSIFIED
        rep.theorem = None
        rep.warnings.append("bottleneck level holds a single queue; the maximum has no ln n scaling")
        return rep
    try:
        if grouped:
            rep.eta = asymptotics.eta_nonhomogeneous(log_mgf_for(spec, lim.load), lim.n_bar)
        else:
            rep.eta = asymptotics.eta_homogeneous(lim.load, lim.n_bar)
    except NoSignChange as exc:
        rep.regime = Regime.UNCLASSIFIED
        rep.theorem = None
        rep.warnings.append(str(exc))
        return rep
    rep.zeta = 1.0 / (rep.eta - 1.0)
    if rep.regime is Regime.GEOMETRIC_BULK:
        if n1 < MIN_QUEUES:
            rep.warnings.append(f"n >> 1 not met: n1={n1} < {MIN_QUEUES}")
        if m < MIN_SEPARATION * n1:
            rep.warnings.append(f"m >> n not met: m={m} < {MIN_SEPARATION}*n1={MIN_SEPARATION * n1}")
    if math.log(n1) < 3 * math.log(rep.eta):
        rep.warnings.append(
            f"ln n >> ln(1+n/m) weakly met: ln n1={math.log(n1):.3g} vs ln eta={math.log(rep.eta):.3g}"
        )
    return rep
