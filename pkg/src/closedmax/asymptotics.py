"""Limit constants and first-order approximations for the maximum queue length."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

import numpy as np
from scipy.special import gammaln, xlogy

from .errors import DegenerateGroup, NearCritical, NoSignChange, ScaleSeparationWarning
from .numerics import find_root_monotone, harmonic, legendre_fenchel, solve_quadratic_positive

if TYPE_CHECKING:
    from .model import NetworkSpec

DEFAULT_BAND = 0.05
ETA_CAP = 2.0**64
_ETA_TOL = 1e-14


# ----------------------------------------------------- eta and zeta


def eta_homogeneous(kappa_bar: float, n_bar: float) -> float:
    """Per-step tail ratio of queue lengths when customers are plentiful.

    With ``n_bar == 0`` this is ``kappa_bar`` itself (which must exceed 1);
    otherwise the root above 1 of ``eta^2 - eta (n_bar + kappa_bar + 1) + kappa_bar``.
    """
    if kappa_bar < 0 or n_bar < 0:
        raise ValueError("limit ratios must be nonnegative")
    if n_bar == 0:
        if kappa_bar <= 1:
            raise NearCritical(f"kappa_bar={kappa_bar} <= 1 with n_bar=0: queues are not geometric")
        return float(kappa_bar)
    return solve_quadratic_positive(1.0, -(n_bar + kappa_bar + 1.0), kappa_bar, 1.0).selected


def zeta_homogeneous(kappa_bar: float, n_bar: float) -> float:
    """Limit of (customers in queues) / (number of queues) in the geometric regimes."""
    if n_bar == 0:
        if kappa_bar <= 1:
            raise NearCritical(f"kappa_bar={kappa_bar} <= 1 with n_bar=0")
        return 1.0 / (kappa_bar - 1.0)
    return solve_quadratic_positive(n_bar, n_bar + kappa_bar - 1.0, -1.0, 0.0).selected


@dataclass(frozen=True)
class LogMgf:
    """Limiting scaled log-MGF of hub occupancy plus non-bottleneck queue totals.

    ``levels`` holds ``(fraction, ratio)`` pairs: the number of queues in the
    level divided by ``m`` and ``kappa_1 / kappa`` of the level (in ``[0, 1)``).
    """

    kappa1: float
    levels: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple((float(f), float(r)) for f, r in self.levels))
        if self.kappa1 < 0:
            raise ValueError("kappa1 must be nonnegative")
        for f, r in self.levels:
            if f < 0 or not 0 <= r < 1:
                raise ValueError(f"level ({f}, {r}) needs fraction >= 0 and ratio in [0, 1)")

    @property
    def mean(self) -> float:
        """``kappa_1 + l_bar``; equals ``-derivative(0)``."""
        return self.kappa1 + math.fsum(f * r / (1 - r) for f, r in self.levels)

    def __call__(self, theta: float) -> float:
        return self.value(theta)

    def value(self, theta: float) -> float:
        e = math.exp(-theta)
        out = self.kappa1 * math.expm1(-theta)
        for f, r in self.levels:
            out += f * (math.log1p(-r) - math.log1p(-r * e))
        return out

    def derivative(self, theta: float) -> float:
        e = math.exp(-theta)
        out = -self.kappa1 * e
        for f, r in self.levels:
            out -= f * r * e / (1 - r * e)
        return out

    def derivative_at_log(self, eta: float) -> float:
        """``derivative(ln eta)`` written directly in ``eta``."""
        return -self.kappa1 / eta - math.fsum(f * r / (eta - r) for f, r in self.levels)


def eta_nonhomogeneous(mgf: LogMgf, n_bar1: float = 0.0) -> float:
    """Root in ``(1, inf)`` of ``Lambda'(ln eta) - n_bar1 / (eta - 1) = -1``."""
    if n_bar1 < 0:
        raise ValueError("n_bar1 must be nonnegative")

    def f(eta: float) -> float:
        out = mgf.derivative_at_log(eta) + 1.0
        if n_bar1 > 0:
            out -= n_bar1 / (eta - 1.0)
        return out

    lo = None
    for gap in (1e-6, 1e-9, 1e-12, 1e-15):
        if f(1.0 + gap) < 0:
            lo = 1.0 + gap
            break
    if lo is None:
        raise NoSignChange(
            f"no eta > 1: kappa_bar1 + l_bar = {mgf.mean:.6g} does not exceed 1 and n_bar1 = 0"
        )
    hi = 2.0
    while f(hi) < 0:
        hi *= 2.0
        if hi > ETA_CAP:
            raise NoSignChange("eta bracket exceeded 2^64")
    return find_root_monotone(f, (lo, hi), tol=_ETA_TOL, ftol=0.0)


# ---------------------------------------------------- concentration


def g_function(i, m: float, n: float, kappa: float):
    """Exponent of the hub/queue split weight as a function of the queued total ``i``."""
    i = np.asarray(i, dtype=float)
    return (
        -xlogy(n + i, n + i)
        + xlogy(n, n)
        - xlogy(m, m)
        + xlogy(i, i)
        + xlogy(m - i, m - i)
        + i * math.log(kappa)
        + i
    )


def g_derivative(x, m: float, n: float, kappa: float):
    x = np.asarray(x, dtype=float)
    return -np.log(n + x) + np.log(x) - np.log(m - x) + math.log(kappa)


def g_second_derivative(x, m: float, n: float):
    x = np.asarray(x, dtype=float)
    return (x * x + m * n) / ((m - x) * x * (n + x))


def _log_stirling(x):
    x = np.asarray(x, dtype=float)
    return 0.5 * np.log(2 * np.pi * x) + xlogy(x, x) - x


def log_h_function(i, m: float, n: float):
    """Log of the slowly varying prefactor: gamma over Stirling ratios times
    ``sqrt(m / ((m - i) i (n + i)))``; defined for ``0 < i < m``."""
    i = np.asarray(i, dtype=float)
    a = gammaln(n + i + 1) - _log_stirling(n + i)
    b = gammaln(m + 1) - _log_stirling(m)
    c = gammaln(i + 1) - _log_stirling(i)
    d = gammaln(m - i + 1) - _log_stirling(m - i)
    return a + b - c - d + 0.5 * np.log(m / ((m - i) * i * (n + i)))


def g_limit_bulk(x: float, kappa_bar: float) -> float:
    """Per-queue limit of ``g`` when ``m >> n``: ``-ln(1+x) - x ln(1+1/x) + x ln kappa_bar``."""
    if x == 0:
        return 0.0
    return -math.log1p(x) - x * math.log1p(1.0 / x) + x * math.log(kappa_bar)


@dataclass
class ConcentrationProfile:
    case: str
    zeta: float
    zeta_n: float
    grid: np.ndarray = field(repr=False)
    g_curve: np.ndarray = field(repr=False)
    log_h_curve: np.ndarray = field(repr=False)
    minimizer: float
    minimizer_check: float
    scaled_minimum: float
    limit_minimum: float | None = None


def concentration_profile(m: int, n: int, kappa: float, band: float = DEFAULT_BAND, points: int = 401) -> ConcentrationProfile:
    """Where the queued total concentrates, for a homogeneous instance.

    ``zeta_n`` is the finite-size point (queued total / n at the minimiser
    of ``g``); ``zeta`` is its limit in the applicable regime.  For a
    lightly loaded hub (``kappa/m < 1``, ``m >> n``) ``zeta`` is instead
    the limit of hub occupancy / m, namely ``kappa/m``.
    """
    if m < 1 or n < 1 or not kappa > 0:
        raise ValueError("need m, n >= 1 and kappa > 0")
    from .model import MIN_SEPARATION

    kb = kappa / m
    nb = n / m if m < MIN_SEPARATION * n else 0.0
    if nb > 0:
        case, zeta = "proportional", zeta_homogeneous(kb, nb)
    elif kb > 1 + band:
        case, zeta = "bulk", 1.0 / (kb - 1.0)
    elif kb < 1 - band:
        case, zeta = "hub-light", kb
    else:
        raise NearCritical(f"kappa/m = {kb:.6g} lies within {band} of 1")
    zn = solve_quadratic_positive(n / m, n / m + kappa / m - 1.0, -1.0, 0.0).selected
    xstar = n * zn
    grid = np.linspace(0.0, float(m), points)[1:-1]
    g = g_function(grid, m, n, kappa)
    logh = log_h_function(grid, m, n)
    resid = float(abs(g_derivative(xstar, m, n, kappa))) if 0 < xstar < m else math.inf
    scaled = float(g_function(xstar, m, n, kappa)) / n
    lim = g_limit_bulk(zeta, kb) if case == "bulk" else None
    return ConcentrationProfile(case, zeta, zn, grid, g, logh, xstar, resid, scaled, lim)


# ----------------------------------------------- geometric regimes


@dataclass
class GeometricPrediction:
    location: float
    level: int
    exponents: dict[int, float]
    excluded: list[int]


def max_scaling_geometric(spec: "NetworkSpec", eta: float, growing: Sequence[bool] | None = None) -> GeometricPrediction:
    """First-order location of the maximum, ``ln n / ln eta`` generalised over levels.

    Each level ``j`` contributes ``(ln eta - ln rho_j) / ln count_j``; the
    smallest contribution wins and its reciprocal is the location.  Levels
    with fewer than two queues, or flagged as not growing, are skipped.
    """
    if not eta > 1:
        raise ValueError("eta must exceed 1")
    levels = spec.levels
    ratios = spec.level_ratios()
    if growing is None:
        growing = [True] * len(levels)
    if len(growing) != len(levels):
        raise ValueError("growing flags must match the number of levels")
    exps: dict[int, float] = {}
    excluded: list[int] = []
    for idx, ((c, _), r, gr) in enumerate(zip(levels, ratios, growing)):
        if c < 2 or not gr:
            excluded.append(idx)
            continue
        if r <= 0:
            continue
        exps[idx] = (math.log(eta) - math.log(r)) / math.log(c)
    if 0 in excluded:
        raise DegenerateGroup(f"bottleneck level has {levels[0][0]} queue(s); its maximum has no ln n scale")
    if excluded:
        warnings.warn(f"levels {excluded} excluded from the location minimum", ScaleSeparationWarning, stacklevel=2)
    best = min(exps, key=lambda k: (exps[k], k))
    return GeometricPrediction(1.0 / exps[best], best, exps, excluded)


# -------------------------------------------------- simplex regime


@dataclass(frozen=True)
class SimplexApprox:
    """Plug-in law of the maximum when a few queues absorb all spare customers."""

    spread: float  # customers left for the bottleneck queues
    n: int

    @property
    def mean(self) -> float:
        return self.spread * harmonic(self.n) / self.n

    @property
    def variance(self) -> float:
        n = self.n
        h1, h2 = harmonic(n), harmonic(n, 2)
        return self.spread**2 * (n * h2 - h1 * h1) / (n * n * (n + 1))

    @property
    def scale(self) -> float:
        return self.spread / self.n

    @property
    def location(self) -> float:
        return self.scale * math.log(self.n)

    def gumbel_value(self, x: float) -> float:
        """Maximum-queue value at standardised Gumbel coordinate ``x``."""
        return self.scale * (x + math.log(self.n))

    def quantile(self, q: float) -> float:
        if not 0 < q < 1:
            raise ValueError("q must lie in (0, 1)")
        return self.gumbel_value(-math.log(-math.log(q)))

    def cdf(self, y: float) -> float:
        if self.scale == 0:
            return 1.0 if y >= 0 else 0.0
        return math.exp(-math.exp(-(y / self.scale - math.log(self.n))))


def max_approx_simplex(spec: "NetworkSpec", band: float = DEFAULT_BAND) -> SimplexApprox:
    """Moments and Gumbel approximation in the lightly loaded hub regime."""
    load = (spec.kappa1 + spec.mean_nonbottleneck()) / spec.m
    if load >= 1 - band:
        raise NearCritical(f"mean hub+queue load ratio {load:.6g} is not below 1 - {band}")
    return SimplexApprox(spec.centred_load(), spec.n1)


def variance_deficit(n: int) -> tuple[float, float]:
    """``(v, (pi^2/6 - v)/v)`` with ``v = (n H2 - H1^2)/(n+1)``.

    ``v`` is ``n^2 var(max)`` on the unit simplex; ``pi^2/6`` is its Gumbel limit.
    """
    h1, h2 = harmonic(n), harmonic(n, 2)
    v = (n * h2 - h1 * h1) / (n + 1)
    return v, (math.pi**2 / 6 - v) / v


def rate_function(mgf: LogMgf, x: float, theta_cap: float = 50.0) -> float:
    """Lower-tail large-deviation rate of (hub + non-bottleneck queues) / m."""
    if x < 0:
        raise ValueError("x must be nonnegative")
    return legendre_fenchel(mgf.value, x, theta_cap)


def gumbel_cdf(x: float) -> float:
    return math.exp(-math.exp(-x))


# ---------------------------------------------------------- report


def asymptotic_report(spec: "NetworkSpec", band: float = DEFAULT_BAND, ratios=None) -> dict:
    """Constants and first-order predictions for one instance, as a JSON-ready dict."""
    from .model import Regime, classify

    rep = classify(spec, ratios, band)
    out = {
        "regime": rep.regime.value,
        "zeta": rep.zeta,
        "eta": rep.eta,
        "predicted_max_location": None,
        "gumbel": None,
        "warnings": list(rep.warnings),
    }
    if rep.regime in (Regime.GEOMETRIC_BULK, Regime.GEOMETRIC_PROPORTIONAL):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            pred = max_scaling_geometric(spec, rep.eta)
        out["warnings"] += [str(w.message) for w in caught]
        out["predicted_max_location"] = pred.location
    elif rep.regime is Regime.SIMPLEX_LIMIT:
        approx = SimplexApprox(spec.centred_load(), spec.n1)
        out["predicted_max_location"] = approx.mean
        out["gumbel"] = {"scale": approx.scale, "location": approx.location}
    return out
