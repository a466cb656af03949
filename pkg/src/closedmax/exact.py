"""Exact stationary laws of a finite network.

Every law is a weighted sum over the total queue population ``k``:
the hub contributes ``omega(k) = m!/(m-k)! * kappa_1^-k`` and the queues
contribute a coefficient ``S(k)`` of a product of per-queue generating
polynomials (geometric series in ``kappa_1/kappa_i``, truncated where a
law constrains queue lengths).  Only the window of ``k`` carrying all but
``exp(-TRIM)`` of the mass is evaluated.  Products of long polynomials are
formed after an exponential tilt ``x -> t x`` that centres them on that
window, so plain float convolution keeps relative accuracy there.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import gammaln
from scipy.stats import poisson

from .errors import ComputationTooLarge, DimensionTooLarge, NumericError, OverflowGuard, StateSpaceTooLarge
from .model import NetworkSpec
from .numerics import (
    LogWeight,
    find_root_monotone,
    log_binom,
    log_gamma_diff,
    log_sum_exp_array,
)

TRIM = 80.0
MAX_CUSTOMERS = 50_000_000
ORACLE_MAX_STATES = 1_000_000
JOINT_MAX_DIM = 8
# inclusion-exclusion is used for groups up to this size, convolution powers above
IE_MAX_COUNT = 300
IE_CANCEL_TOL = 1e-6
WORK_BUDGET = 4e9
EXACT_FALLBACK_BUDGET = 2e8
_DIRECT_CONV_LIMIT = 3e7
_CDF_DONE = 1e-14
# once within this of 1, stop as soon as the CDF stops moving (rounding floor)
_CDF_STALL = 1e-9


# ---------------------------------------------------------------- Pmf


@dataclass
class Pmf:
    """Probability mass function on ``offset, offset+1, ...``."""

    offset: int
    masses: np.ndarray
    log_masses: np.ndarray = field(repr=False)

    @classmethod
    def from_log(cls, offset: int, log_w) -> "Pmf":
        log_w = np.asarray(log_w, dtype=float)
        log_w = log_w - log_sum_exp_array(log_w)
        with np.errstate(under="ignore"):
            masses = np.exp(log_w)
        return cls(int(offset), masses, log_w)

    @classmethod
    def from_masses(cls, offset: int, masses) -> "Pmf":
        masses = np.clip(np.asarray(masses, dtype=float), 0.0, None)
        with np.errstate(divide="ignore"):
            return cls(int(offset), masses, np.log(masses))

    @classmethod
    def from_cdf(cls, offset: int, cdf) -> "Pmf":
        cdf = np.maximum.accumulate(np.clip(np.asarray(cdf, dtype=float), 0.0, 1.0))
        return cls.from_masses(offset, np.diff(cdf, prepend=0.0))

    @classmethod
    def point_mass(cls, value: int) -> "Pmf":
        return cls.from_masses(value, [1.0])

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.offset, self.offset + self.masses.size)

    def __len__(self) -> int:
        return self.masses.size

    def pmf(self, x: int) -> float:
        i = int(x) - self.offset
        return float(self.masses[i]) if 0 <= i < self.masses.size else 0.0

    def cdf(self, x: int | None = None):
        """``P[X <= x]``; without ``x`` the whole CDF vector over the support."""
        c = np.minimum(np.cumsum(self.masses), 1.0)
        if x is None:
            return c
        i = int(math.floor(x)) - self.offset
        if i < 0:
            return 0.0
        return float(c[min(i, c.size - 1)])

    def sf(self, x: int) -> float:
        """``P[X > x]``."""
        i = int(math.floor(x)) - self.offset
        if i < 0:
            return 1.0
        return float(math.fsum(self.masses[i + 1 :]))

    def tail(self, x: int) -> float:
        """``P[X >= x]``."""
        return self.sf(x - 1)

    @property
    def total(self) -> float:
        return float(math.fsum(self.masses))

    @property
    def mean(self) -> float:
        return float(np.dot(self.support.astype(float), self.masses))

    @property
    def var(self) -> float:
        x = self.support.astype(float) - self.mean
        return float(np.dot(x * x, self.masses))

    def quantile(self, q: float, interpolate: bool = False) -> float:
        """Smallest ``x`` with ``P[X <= x] >= q``.

        With ``interpolate`` the CDF is joined linearly between support
        points and the crossing of level ``q`` is returned instead.
        """
        if not 0 < q < 1:
            raise ValueError("q must lie in (0, 1)")
        c = self.cdf()
        i = int(np.searchsorted(c, q, side="left"))
        i = min(i, c.size - 1)
        if not interpolate:
            return float(self.offset + i)
        lo = c[i - 1] if i > 0 else 0.0
        step = c[i] - lo
        frac = (q - lo) / step if step > 0 else 1.0
        return float(self.offset + i - 1 + frac)

    def median(self, interpolate: bool = False) -> float:
        return self.quantile(0.5, interpolate)

    def to_dict(self) -> dict:
        return {"offset": self.offset, "masses": [float(x) for x in self.masses]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Pmf":
        d = json.loads(text)
        return cls.from_masses(d["offset"], d["masses"])

    def to_csv(self, trim: float = 0.0) -> str:
        """Rows ``value,pmf,cdf``; rows whose mass is ``<= trim`` at either end are dropped."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["value", "pmf", "cdf"])
        keep = np.nonzero(self.masses > trim)[0]
        lo, hi = (keep[0], keep[-1]) if keep.size else (0, self.masses.size - 1)
        c = self.cdf()
        for i in range(lo, hi + 1):
            w.writerow([self.offset + i, repr(float(self.masses[i])), repr(float(c[i]))])
        return buf.getvalue()


# ------------------------------------------------- bounded compositions


def bounded_compositions(k: int, n: int, j: int) -> int:
    """Number of ways to write ``k`` as an ordered sum of ``n`` parts in ``[0, j]`` (exact)."""
    if k < 0 or j < 0 or n < 0:
        return 0
    if n == 0:
        return 1 if k == 0 else 0
    total = 0
    for i in range(min(n, k // (j + 1)) + 1):
        term = math.comb(n, i) * math.comb(k - i * (j + 1) + n - 1, n - 1)
        total += -term if i & 1 else term
    return total


def _log_int(x: int) -> float:
    return math.log(x) if x > 0 else -math.inf


def log_bounded_compositions(k, n: int, j):
    """``ln N(k, n, j)`` vectorised over ``k`` and ``j``.

    Inclusion-exclusion is summed in linear space after dividing every
    term by ``C(k+n-1, n-1)``.  Rows whose alternating sum loses more than
    ``IE_CANCEL_TOL`` relative accuracy are recomputed with exact integers.
    """
    k, j = np.broadcast_arrays(np.asarray(k, dtype=np.int64), np.asarray(j, dtype=np.int64))
    shape = k.shape
    k, j = k.ravel(), j.ravel()
    out = np.full(k.shape, -np.inf)
    valid = (k >= 0) & (j >= 0)
    full = valid & (j >= k)
    out[full] = log_binom(k[full] + n - 1, n - 1)
    mid = np.nonzero(valid & ~full & (j * n >= k))[0]
    if mid.size:
        imax = np.minimum(n, k[mid] // (j[mid] + 1))
        work = float(np.sum(imax + 1))
        if work > WORK_BUDGET:
            raise ComputationTooLarge(f"inclusion-exclusion needs {work:.3g} terms")
        order = np.argsort(imax, kind="stable")
        mid, imax = mid[order], imax[order]
        bad: list[int] = []
        start = 0
        while start < mid.size:
            stop = start + 1
            # grow the chunk while the rectangle stays small
            while stop < mid.size and (stop - start + 1) * (int(imax[stop]) + 1) <= 4_000_000:
                stop += 1
            rows = mid[start:stop]
            width = int(imax[stop - 1]) + 1
            out_rows, bad_rows = _ie_chunk(k[rows], j[rows], n, width)
            out[rows] = out_rows
            bad.extend(rows[bad_rows].tolist())
            start = stop
        if bad:
            cost = sum(min(n, int(k[r]) // (int(j[r]) + 1)) + 1 for r in bad) * (n + 64)
            if cost > EXACT_FALLBACK_BUDGET:
                raise ComputationTooLarge(
                    f"{len(bad)} bounded-composition counts need exact arithmetic (cost {cost:.3g})"
                )
            for r in bad:
                out[r] = _log_int(bounded_compositions(int(k[r]), n, int(j[r])))
    return out.reshape(shape) if shape else float(out[0])


def _ie_chunk(k, j, n, width):
    i = np.arange(width)
    s = i[None, :] * (j[:, None] + 1)
    live = i[None, :] <= np.minimum(n, k // (j + 1))[:, None]
    s = np.where(live, s, 0)
    base = log_gamma_diff(k + 1.0, n - 1.0)
    ratio = log_gamma_diff((k[:, None] - s) + 1.0, n - 1.0) - base[:, None]
    logt = np.where(live, log_binom(n, i)[None, :] + ratio, -np.inf)
    top = np.max(logt, axis=1)
    with np.errstate(under="ignore"):
        mag = np.exp(logt - top[:, None])
    signed = np.where(i[None, :] & 1, -mag, mag)
    total = np.sum(signed, axis=1)
    absum = np.sum(mag, axis=1)
    delta = 8 * np.finfo(float).eps * (np.abs(base) + gammaln(n + 1.0) + 10.0)
    ok = (total > 0) & (absum * delta <= IE_CANCEL_TOL * total)
    with np.errstate(divide="ignore", invalid="ignore"):
        res = np.log(np.where(ok, total, 1.0)) + top + base - gammaln(float(n))
    return res, ~ok


# ------------------------------------------------------- polynomials


def _conv(a: np.ndarray, b: np.ndarray, length: int) -> np.ndarray:
    if a.size * b.size <= _DIRECT_CONV_LIMIT or min(a.size, b.size) < 64:
        out = np.convolve(a, b)
    else:
        out = np.maximum(fftconvolve(a, b), 0.0)
    return out[:length]


def _trim_log(offset: int, lv: np.ndarray, depth: float):
    """Drop leading/trailing entries more than ``depth`` nats below the maximum."""
    top = np.max(lv)
    keep = np.nonzero(lv >= top - depth)[0]
    return offset + int(keep[0]), lv[keep[0] : keep[-1] + 1]


def _tilted_product(seqs, log_t: float, length: int, depth: float = 2 * TRIM):
    """Coefficients ``[x^k]`` (k < length) of a product of polynomials, in logs.

    ``seqs`` holds ``(offset, log_coeffs)`` pairs.  Each factor is tilted
    by ``t^r`` and trimmed before multiplying; the tilt is undone at the end.
    """
    acc = np.array([1.0])
    acc_off, acc_log = 0, 0.0
    for off, lv in seqs:
        lv = np.asarray(lv, dtype=float)
        r = off + np.arange(lv.size)
        tl = lv + r * log_t
        if not np.any(np.isfinite(tl)):
            return 0, np.full(length, -np.inf)
        off2, tl = _trim_log(off, tl, depth)
        top = float(np.max(tl))
        with np.errstate(under="ignore"):
            arr = np.exp(tl - top)
        acc_off += off2
        acc_log += top
        if acc_off >= length:
            return 0, np.full(length, -np.inf)
        acc = _conv(acc, arr, length - acc_off)
        s = float(np.max(acc))
        if s <= 0:
            return 0, np.full(length, -np.inf)
        acc /= s
        acc_log += math.log(s)
    out = np.full(length, -np.inf)
    idx = acc_off + np.arange(acc.size)
    with np.errstate(divide="ignore"):
        out[idx] = np.log(acc) + acc_log - idx * log_t
    return 0, out


def _geometric_level_log(count: int, rho: float, length: int) -> np.ndarray:
    """``ln [x^r] (1 - rho x)^-count`` for ``r < length``."""
    r = np.arange(length, dtype=float)
    if rho == 0.0:
        out = np.full(length, -np.inf)
        out[0] = 0.0
        return out
    lv = log_binom(r + count - 1, count - 1)
    return lv + r * math.log(rho) if rho != 1.0 else lv


def _truncated_mean(log_q: float, j: int) -> float:
    """Mean of the law on ``0..j`` with weights ``q^l``."""
    if j == 0:
        return 0.0
    if log_q > 0:
        return j - _truncated_mean(-log_q, j)
    if log_q > -1e-9:
        return 0.5 * j
    q = math.exp(log_q)
    qj = math.exp((j + 1) * log_q)
    return q / -math.expm1(log_q) - (j + 1) * qj / -math.expm1((j + 1) * log_q)


def _log_truncated_norm(log_q: float, j: int) -> float:
    """``ln sum_{l=0}^j q^l``."""
    if abs(log_q) < 1e-12:
        return math.log(j + 1)
    if log_q > 0:
        return j * log_q + _log_truncated_norm(-log_q, j)
    return math.log(-math.expm1((j + 1) * log_q)) - math.log(-math.expm1(log_q))


def _bounded_power_log(count: int, log_q: float, j: int, length: int) -> np.ndarray:
    """``ln [x^r] (sum_{l<=j} x^l)^count`` for ``r < length`` via binary powering
    of the ``q``-tilted truncated geometric law."""
    jj = min(j, length - 1)
    logs = np.arange(jj + 1) * log_q
    base_log = float(np.max(logs))
    base = np.exp(logs - base_log)
    res, res_log = None, 0.0
    e = count
    while e:
        if e & 1:
            if res is None:
                res, res_log = base.copy(), base_log
            else:
                res = _conv(res, base, length)
                res_log += base_log
                s = float(np.max(res))
                res /= s
                res_log += math.log(s)
        e >>= 1
        if e:
            base = _conv(base, base, length)
            base_log *= 2
            s = float(np.max(base))
            base /= s
            base_log += math.log(s)
    r = np.arange(res.size)
    out = np.full(length, -np.inf)
    with np.errstate(divide="ignore"):
        out[: res.size] = np.log(res) + res_log - r * log_q
    return out


def _bounded_level_log(count: int, rho: float, j: int, length: int, log_t: float) -> np.ndarray:
    """``ln [x^r] (sum_{l<=j} (rho x)^l)^count`` for ``r < length``."""
    if rho == 0.0 or j == 0:
        out = np.full(length, -np.inf)
        out[0] = 0.0
        return out
    if j >= length - 1:
        return _geometric_level_log(count, rho, length)
    lrho = math.log(rho)
    r = np.arange(length)
    if count == 1:
        return np.where(r <= j, r * lrho, -np.inf)
    if count <= IE_MAX_COUNT:
        return log_bounded_compositions(r, count, j) + r * lrho
    return _bounded_power_log(count, log_t + lrho, j, length) + r * lrho


def log_bounded_count(k: int, n: int, j: int) -> float:
    """``ln N(k, n, j)`` for one triple, choosing inclusion-exclusion or a
    tilted convolution power by the size of ``n``."""
    if k < 0 or j < 0:
        return -math.inf
    if j >= k:
        return float(log_binom(k + n - 1, n - 1))
    if j * n < k:
        return -math.inf
    if n <= IE_MAX_COUNT:
        return float(log_bounded_compositions(k, n, j))
    target = k / n
    lo, hi = -50.0, 50.0
    log_q = find_root_monotone(lambda u: _truncated_mean(u, j) - target, (lo, hi), tol=1e-13)
    return float(_bounded_power_log(n, log_q, j, k + 1)[k])


# ---------------------------------------------------------- network


@dataclass(frozen=True)
class _Net:
    m: int
    counts: tuple[int, ...]
    rhos: tuple[float, ...]
    kappa1: float

    @classmethod
    def of(cls, spec: NetworkSpec) -> "_Net":
        if spec.m > MAX_CUSTOMERS:
            raise OverflowGuard(f"m={spec.m} exceeds the supported maximum {MAX_CUSTOMERS}")
        return cls(spec.m, tuple(c for c, _ in spec.levels), tuple(spec.level_ratios()), float(spec.kappa1))

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def homogeneous(self) -> bool:
        return len(self.counts) == 1

    def log_omega(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        if self.kappa1 == 0.0:
            return np.where(k == self.m, 0.0, -np.inf)
        return log_gamma_diff(self.m - k + 1.0, k) - k * math.log(self.kappa1)

    def capacity(self, j: int) -> int:
        return j * sum(c for c, r in zip(self.counts, self.rhos) if r > 0)

    def queue_rhos(self) -> np.ndarray:
        return np.concatenate([np.full(c, r) for c, r in zip(self.counts, self.rhos)])

    def saddle_log_t(self, bounds: list[tuple[float, int | None]] | None = None) -> float:
        """Log tilt balancing hub and queues.

        Solves ``m - sum_i E_t[L_i] - kappa_1 t = 0`` where queue ``i`` is
        geometric with ratio ``t rho_i``, truncated at its bound if given.
        ``bounds`` lists ``(rho, bound)`` per factor with multiplicity via
        repetition; by default one untruncated factor per level.
        """
        truncated = bounds is not None
        terms = bounds if truncated else [(c, r, None) for c, r in zip(self.counts, self.rhos)]
        m, k1 = self.m, self.kappa1

        def excess(u: float) -> float:
            tot = k1 * math.exp(u)
            for c, r, b in terms:
                if r == 0.0:
                    continue
                lq = u + math.log(r)
                if b is None:
                    if lq >= 0:
                        return -1e300
                    tot += c * math.exp(lq) / -math.expm1(lq)
                else:
                    tot += c * _truncated_mean(lq, b)
            return max(m - tot, -1e300)

        if truncated:
            hi = 1.0
            while excess(hi) > 0 and hi < 700.0:
                hi = min(2 * hi, 700.0)
            if excess(hi) >= 0:
                return hi
        else:
            hi = -1e-12
        lo = -1.0
        while excess(lo) < 0 and lo > -1e4:
            lo *= 2
        if excess(lo) <= 0:
            return lo
        return find_root_monotone(excess, (lo, hi), tol=1e-12)


@dataclass
class _Total:
    log_omega: np.ndarray  # over 0..m
    log_weights: np.ndarray  # omega(k) * S(k), unnormalised
    log_norm: float
    klo: int
    khi: int
    log_t: float


@lru_cache(maxsize=32)
def _total(spec: NetworkSpec) -> _Total:
    net = _Net.of(spec)
    m = net.m
    k = np.arange(m + 1, dtype=float)
    lom = net.log_omega(k)
    log_t = net.saddle_log_t()
    if net.homogeneous:
        lw = lom + log_binom(k + net.counts[0] - 1, net.counts[0] - 1)
    else:
        depth = 2 * TRIM
        while True:
            seqs = [(0, _geometric_level_log(c, r, m + 1)) for c, r in zip(net.counts, net.rhos)]
            _, ls = _tilted_product(seqs, log_t, m + 1, depth)
            lw = lom + ls
            fin = np.nonzero(np.isfinite(ls))[0]
            top = np.max(lw)
            edges_ok = (fin[0] == 0 or lw[fin[0]] < top - TRIM) and (fin[-1] == m or lw[fin[-1]] < top - TRIM)
            if edges_ok:
                break
            if depth >= 700:
                raise NumericError("total-population window could not be resolved")
            depth = min(700.0, 2 * depth)
    top = float(np.max(lw))
    if not math.isfinite(top):
        raise OverflowGuard("no finite weight in the total-population law")
    win = np.nonzero(lw >= top - TRIM)[0]
    return _Total(lom, lw, log_sum_exp_array(lw), int(win[0]), int(win[-1]), log_t)


# ------------------------------------------------------ public laws


@dataclass(frozen=True)
class PartitionFunction:
    log_c: LogWeight
    m: int
    n: int
    method: str
    alternative: LogWeight | None = None

    @property
    def relative_gap(self) -> float:
        """``|c_alt / c - 1|`` between the two computation routes."""
        if self.alternative is None:
            return 0.0
        a, b = self.log_c.log_value, self.alternative.log_value
        if a == b:
            return 0.0
        return abs(math.expm1(b - a))


def partition_function(spec: NetworkSpec, method: str = "direct-sum") -> PartitionFunction:
    """``ln c``, the reciprocal of the empty-state probability.

    Homogeneous specs are computed both by summing the product-form
    weights over the total and by the Poisson-mixture ratio; ``method``
    picks which value is primary and the other is kept for cross-checks.
    Grouped specs use the level convolution only.
    """
    net = _Net.of(spec)
    m = net.m
    if not net.homogeneous:
        return PartitionFunction(LogWeight(_total(spec).log_norm), m, net.n, "level-convolution")
    n, kappa = net.counts[0], net.kappa1
    if kappa == 0.0:
        inf = LogWeight(math.inf)
        return PartitionFunction(inf, m, n, method, inf)
    k = np.arange(m + 1, dtype=float)
    direct = log_sum_exp_array(log_binom(k + n - 1, n - 1) + log_gamma_diff(m - k + 1.0, k) - k * math.log(kappa))
    i = np.arange(m + 1)
    terms = poisson.logpmf(i, kappa) + log_gamma_diff(m + 1.0 - i, n - 1.0)
    pois = log_sum_exp_array(terms) - gammaln(n) - poisson.logpmf(m, kappa)
    if not (math.isfinite(direct) and math.isfinite(pois)):
        raise OverflowGuard("partition function left the floating-point range")
    if method == "direct-sum":
        return PartitionFunction(LogWeight(direct), m, n, method, LogWeight(float(pois)))
    if method == "poisson-representation":
        return PartitionFunction(LogWeight(float(pois)), m, n, method, LogWeight(direct))
    raise ValueError(f"unknown method {method!r}")


def total_population_law(spec: NetworkSpec) -> Pmf:
    """Law of the number of customers queued at the single-server queues."""
    t = _total(spec)
    return Pmf.from_log(0, t.log_weights - t.log_norm)


def _queue_index_level(spec: NetworkSpec, queue_index: int) -> int:
    n = spec.n
    if not 0 <= queue_index < n:
        raise IndexError(f"queue index {queue_index} outside 0..{n - 1}")
    acc = 0
    for lvl, (c, _) in enumerate(spec.levels):
        acc += c
        if queue_index < acc:
            return lvl
    raise AssertionError


def marginal_law(spec: NetworkSpec, queue_index: int = 0) -> Pmf:
    """Law of one queue length; ``queue_index`` counts queues in validated order (0-based)."""
    net = _Net.of(spec)
    tot = _total(spec)
    lvl = _queue_index_level(spec, queue_index)
    rho = net.rhos[lvl]
    m, klo, khi = net.m, tot.klo, tot.khi
    length = khi + 1
    counts = list(net.counts)
    counts[lvl] -= 1
    seqs = [(0, _geometric_level_log(c, r, length)) for c, r in zip(counts, net.rhos) if c > 0]
    if not seqs:
        rest = np.full(length, -np.inf)
        rest[0] = 0.0
    elif len(seqs) == 1:
        rest = seqs[0][1]
    else:
        _, rest = _tilted_product(seqs, tot.log_t, length)
    out = np.full(m + 1, -np.inf)
    if rho == 0.0:
        out[0] = 0.0
        return Pmf.from_log(0, out)
    lrho = math.log(rho)
    ks = np.arange(klo, khi + 1)
    base = tot.log_omega[ks] - tot.log_norm
    jmax = khi
    work = float(jmax + 1) * ks.size
    if work > WORK_BUDGET:
        raise ComputationTooLarge(f"marginal law needs {work:.3g} operations")
    chunk = max(1, int(4_000_000 // ks.size))
    for j0 in range(0, jmax + 1, chunk):
        js = np.arange(j0, min(jmax, j0 + chunk - 1) + 1)
        kk = ks[None, :] - js[:, None]
        valid = kk >= 0
        lr = np.where(valid, rest[np.clip(kk, 0, None)], -np.inf)
        out[js] = log_sum_exp_array(base[None, :] + lr, axis=1) + js * lrho
    return Pmf.from_log(0, out)


def joint_cdf(spec: NetworkSpec, l) -> float:
    """``P[L_i <= l_i for all i]`` with ``l`` in validated queue order."""
    net = _Net.of(spec)
    n = net.n
    if n > JOINT_MAX_DIM:
        raise DimensionTooLarge(f"joint CDF supports at most {JOINT_MAX_DIM} queues, got {n}")
    l = [int(x) for x in l]
    if len(l) != n:
        raise ValueError(f"bound vector has {len(l)} entries for {n} queues")
    if min(l) < 0:
        return 0.0
    tot = _total(spec)
    length = tot.khi + 1
    rhos = net.queue_rhos()
    log_t = net.saddle_log_t([(1, float(r), min(b, length)) for r, b in zip(rhos, l)])
    seqs = [(0, _bounded_level_log(1, float(r), b, length, log_t)) for r, b in zip(rhos, l)]
    _, ls = _tilted_product(seqs, log_t, length)
    ks = np.arange(tot.klo, tot.khi + 1)
    val = math.exp(min(0.0, log_sum_exp_array(tot.log_omega[ks] + ls[ks] - tot.log_norm)))
    return min(1.0, val)


def _finished(f: float, prev: float) -> bool:
    return f >= 1.0 - _CDF_DONE or (f >= 1.0 - _CDF_STALL and f - prev <= 4 * np.finfo(float).eps)


def _homogeneous_max_cdf(net: _Net, tot: _Total) -> np.ndarray:
    m, n = net.m, net.counts[0]
    klo, khi = tot.klo, tot.khi
    cdf = np.ones(m + 1)
    j_lo = -(-klo // n) if n > 0 else 0
    cdf[: min(j_lo, m + 1)] = 0.0
    ks = np.arange(klo, khi + 1)
    base = tot.log_omega[ks] - tot.log_norm
    j = j_lo
    if n <= IE_MAX_COUNT:
        rows_per_j = ks.size
        chunk = max(1, int(200_000 // rows_per_j))
        budget = 0.0
        while j < khi:
            js = np.arange(j, min(khi, j + chunk))
            budget += float(js.size) * np.sum(np.minimum(n, ks // (js[0] + 1)) + 1)
            if budget > WORK_BUDGET:
                raise ComputationTooLarge("maximum law via inclusion-exclusion exceeds the work budget")
            ln = log_bounded_compositions(ks[None, :], n, js[:, None])
            f = np.exp(np.minimum(log_sum_exp_array(base[None, :] + ln, axis=1), 0.0))
            cdf[js] = f
            j = int(js[-1]) + 1
            if _finished(f[-1], cdf[js[-1] - 1] if js[-1] >= 1 else 0.0):
                break
        return cdf
    length = khi + 1
    while j < khi:
        log_t = net.saddle_log_t([(n, 1.0, j)])
        ln = _bounded_power_log(n, log_t, j, length)
        f = math.exp(min(0.0, log_sum_exp_array(base + ln[ks])))
        cdf[j] = f
        j += 1
        if _finished(f, cdf[j - 2] if j >= 2 else 0.0):
            break
    return cdf


def _grouped_max_cdf(net: _Net, tot: _Total) -> np.ndarray:
    m, klo, khi = net.m, tot.klo, tot.khi
    length = khi + 1
    cdf = np.ones(m + 1)
    ks = np.arange(klo, khi + 1)
    base = tot.log_omega[ks] - tot.log_norm
    j = 0
    while net.capacity(j) < klo:
        cdf[j] = 0.0
        j += 1
    budget = 0.0
    while j < khi:
        terms = [(c, r, j) for c, r in zip(net.counts, net.rhos)]
        log_t = net.saddle_log_t(terms)
        for c, r in zip(net.counts, net.rhos):
            if c <= IE_MAX_COUNT and c > 1 and j < length - 1:
                budget += length * min(c, length // (j + 1) + 1)
        if budget > WORK_BUDGET:
            raise ComputationTooLarge("grouped maximum law exceeds the work budget")
        seqs = [(0, _bounded_level_log(c, r, j, length, log_t)) for c, r in zip(net.counts, net.rhos)]
        _, ls = _tilted_product(seqs, log_t, length)
        f = math.exp(min(0.0, log_sum_exp_array(base + ls[ks])))
        cdf[j] = f
        j += 1
        if _finished(f, cdf[j - 2] if j >= 2 else 0.0):
            break
    return cdf


def max_law(spec: NetworkSpec) -> Pmf:
    """Law of the longest single-server queue, on ``0..m``."""
    net = _Net.of(spec)
    tot = _total(spec)
    if net.homogeneous:
        cdf = _homogeneous_max_cdf(net, tot)
    else:
        cdf = _grouped_max_cdf(net, tot)
    return Pmf.from_cdf(0, cdf)


# ----------------------------------------------------------- oracle


@dataclass
class OracleLaw:
    """Exact rational stationary law obtained by listing every state.

    Weights are integers over the common denominator ``total``.
    """

    m: int
    n: int
    weights: dict[tuple[int, ...], int] = field(repr=False)
    total: int = field(repr=False)
    log_partition: float = math.nan

    @cached_property
    def states(self) -> dict[tuple[int, ...], Fraction]:
        return {s: Fraction(w, self.total) for s, w in self.weights.items()}

    def _law(self, key) -> list[Fraction]:
        acc = [0] * (self.m + 1)
        for s, w in self.weights.items():
            acc[key(s)] += w
        return [Fraction(a, self.total) for a in acc]

    def total_population_law(self) -> list[Fraction]:
        return self._law(sum)

    def marginal_law(self, queue_index: int = 0) -> list[Fraction]:
        return self._law(lambda s: s[queue_index])

    def max_law(self) -> list[Fraction]:
        return self._law(max)

    def joint_cdf(self, l) -> Fraction:
        hit = sum(w for s, w in self.weights.items() if all(a <= b for a, b in zip(s, l)))
        return Fraction(hit, self.total)

    def partition_function(self) -> float:
        """``ln c``; infinite when the hub can never hold a customer."""
        return self.log_partition

    @staticmethod
    def as_pmf(masses) -> Pmf:
        return Pmf.from_masses(0, [float(x) for x in masses])


def _compositions_upto(m: int, n: int):
    if n == 0:
        yield ()
        return
    for first in range(m + 1):
        for rest in _compositions_upto(m - first, n - 1):
            yield (first,) + rest


def enumerate_oracle(spec: NetworkSpec) -> OracleLaw:
    """Stationary probabilities of every state as exact fractions.

    ``kappa`` values are taken as the exact binary fractions of their
    floats.  A zero bottleneck ``kappa`` is the limit in which the hub is
    always empty: only full states on the bottleneck queues survive.
    """
    m = spec.m
    kap = [Fraction(float(x)) for x in spec.queue_kappas()]
    n = len(kap)
    size = math.comb(m + n, n)
    if size > ORACLE_MAX_STATES:
        raise StateSpaceTooLarge(f"{size} states exceed the oracle limit {ORACLE_MAX_STATES}")
    weights: dict[tuple[int, ...], int] = {}
    if kap[0] == 0:
        for s in _compositions_upto(m, n):
            if sum(s) == m and all(x == 0 for x, kk in zip(s, kap) if kk != 0):
                weights[s] = 1
        total = sum(weights.values())
        return OracleLaw(m, n, weights, total, math.inf)
    # m!/(m-|s|)! prod (q_i/p_i)^{s_i} for kappa_i = p_i/q_i, scaled by prod p_i^m
    num = [k.numerator for k in kap]
    den = [k.denominator for k in kap]
    scale = math.prod(p**m for p in num)
    pw_den = [[d**x for x in range(m + 1)] for d in den]
    pw_num = [[p ** (m - x) for x in range(m + 1)] for p in num]
    for s in _compositions_upto(m, n):
        w = math.perm(m, sum(s))
        for i, x in enumerate(s):
            w *= pw_den[i][x] * pw_num[i][x]
        weights[s] = w
    total = sum(weights.values())
    log_c = math.log(total) - math.log(scale)
    return OracleLaw(m, n, weights, total, log_c)


__all__ = [
    "Pmf",
    "PartitionFunction",
    "OracleLaw",
    "bounded_compositions",
    "log_bounded_compositions",
    "log_bounded_count",
    "partition_function",
    "total_population_law",
    "marginal_law",
    "max_law",
    "joint_cdf",
    "enumerate_oracle",
]
