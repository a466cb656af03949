"""Two independent samplers of the stationary queue lengths.

``sample_stationary`` draws exact i.i.d. states from the product form.
``simulate_ctmc`` runs the network dynamics themselves and never looks
at the product form, so agreement between the two checks both.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from . import exact
from .exact import Pmf
from .model import NetworkSpec, Rates
from .simplex import DiscreteSimplex, sample_discrete

DEFAULT_SEED = 0xC10CED
ENGINE_STATIONARY = "stationary-exact"
ENGINE_CTMC = "ctmc"
_STEP_CHUNK = 1 << 20
_HIST_MAX_STATES = 1 << 20


def stream_generators(seed: int, streams: int) -> list[np.random.Generator]:
    """Independent generators for ``streams`` workers, fixed by ``seed`` alone."""
    if streams < 1:
        raise ValueError("streams must be >= 1")
    return [np.random.default_rng(s) for s in np.random.SeedSequence(int(seed)).spawn(streams)]


def _split(count: int, streams: int) -> list[int]:
    base, extra = divmod(count, streams)
    return [base + (1 if s < extra else 0) for s in range(streams)]


@dataclass
class SampleBatch:
    samples: np.ndarray  # rows x queues, validated queue order
    seed: int | None
    stream_ids: np.ndarray  # one id per row
    engine: str
    spec: NetworkSpec
    occupancy: dict | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.samples.ndim != 2 or self.samples.shape[1] != self.spec.n:
            raise ValueError("samples must have one column per queue")
        if self.samples.size and (self.samples.min() < 0 or self.samples.sum(axis=1).max() > self.spec.m):
            raise ValueError("sample rows must be nonnegative with total at most m")

    @property
    def maxima(self) -> np.ndarray:
        return self.samples.max(axis=1) if self.samples.shape[0] else np.zeros(0, dtype=np.int64)

    @property
    def hub(self) -> np.ndarray:
        return self.spec.m - self.samples.sum(axis=1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"q{i + 1}" for i in range(self.spec.n)] + ["max", "M"])
        mx, hub = self.maxima, self.hub
        for row, a, b in zip(self.samples.tolist(), mx.tolist(), hub.tolist()):
            w.writerow(row + [a, b])
        return buf.getvalue()


# ------------------------------------------------- exact sampler


def _inverse_cdf(pmf: Pmf, u: np.ndarray) -> np.ndarray:
    c = pmf.cdf()
    c[-1] = 1.0
    return pmf.offset + np.minimum(np.searchsorted(c, u, side="right"), c.size - 1)


def _level_prefix_logs(spec: NetworkSpec, length: int):
    """Per-level coefficient logs and their running products (levels in order)."""
    net = exact._Net.of(spec)
    tot = exact._total(spec)
    levels = [exact._geometric_level_log(c, r, length) for c, r in zip(net.counts, net.rhos)]
    prefix = [levels[0]]
    for lv in levels[1:]:
        _, p = exact._tilted_product([(0, prefix[-1]), (0, lv)], tot.log_t, length)
        prefix.append(p)
    return levels, prefix


def _sample_level_totals(spec: NetworkSpec, totals: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Split each total among the levels, last level first, by back-sampling
    through the prefix products."""
    L = len(spec.levels)
    out = np.zeros((totals.size, L), dtype=np.int64)
    if L == 1:
        out[:, 0] = totals
        return out
    length = int(totals.max()) + 1
    levels, prefix = _level_prefix_logs(spec, length)
    remaining = totals.copy()
    for lvl in range(L - 1, 0, -1):
        u = rng.random(totals.size)
        for k in np.unique(remaining):
            rows = np.nonzero(remaining == k)[0]
            r = np.arange(k + 1)
            lw = levels[lvl][r] + prefix[lvl - 1][k - r]
            pmf = Pmf.from_log(0, lw)
            out[rows, lvl] = _inverse_cdf(pmf, u[rows])
        remaining = remaining - out[:, lvl]
    out[:, 0] = remaining
    return out


def _allocate_uniform(count: int, totals: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    out = np.zeros((totals.size, count), dtype=np.int64)
    for k in np.unique(totals):
        rows = np.nonzero(totals == k)[0]
        out[rows] = sample_discrete(DiscreteSimplex(count, int(k)), rng, size=rows.size)
    return out


def _stationary_block(spec: NetworkSpec, count: int, rng: np.random.Generator) -> np.ndarray:
    totals = _inverse_cdf(exact.total_population_law(spec), rng.random(count))
    per_level = _sample_level_totals(spec, totals, rng)
    blocks = [_allocate_uniform(c, per_level[:, i], rng) for i, (c, _) in enumerate(spec.levels)]
    return np.concatenate(blocks, axis=1)


def sample_stationary(
    spec: NetworkSpec,
    count: int,
    seed: int = DEFAULT_SEED,
    streams: int = 1,
    workers: int = 1,
    rng: np.random.Generator | None = None,
) -> SampleBatch:
    """``count`` independent exact draws of the stationary queue-length vector.

    Rows are split into ``streams`` contiguous blocks, one generator each;
    ``workers`` only changes how blocks are scheduled, never the output.
    Passing ``rng`` uses that generator as a single stream instead.
    """
    if count < 0:
        raise ValueError("count must be nonnegative")
    if rng is not None:
        rows = _stationary_block(spec, count, rng)
        return SampleBatch(rows, None, np.zeros(count, dtype=np.int64), ENGINE_STATIONARY, spec)
    gens = stream_generators(seed, streams)
    sizes = _split(count, streams)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        blocks = list(pool.map(lambda a: _stationary_block(spec, a[0], a[1]), zip(sizes, gens)))
    ids = np.repeat(np.arange(streams), sizes)
    return SampleBatch(np.concatenate(blocks, axis=0), int(seed), ids, ENGINE_STATIONARY, spec)


# ----------------------------------------------------------- CTMC


@dataclass(frozen=True)
class CtmcConfig:
    """Event counts for the dynamic simulation; ``None`` picks size-based defaults."""

    burn_in_events: int | None = None
    sample_interval_events: int | None = None
    replications: int = 1000
    streams: int = 1

    def resolved(self, n: int) -> "CtmcConfig":
        cfg = CtmcConfig(
            self.burn_in_events if self.burn_in_events is not None else 10_000 * (n + 1),
            self.sample_interval_events if self.sample_interval_events is not None else 10 * (n + 1),
            self.replications,
            self.streams,
        )
        if cfg.burn_in_events < 1 or cfg.sample_interval_events < 1 or cfg.replications < 1 or cfg.streams < 1:
            raise ValueError("CTMC configuration values must be positive")
        return cfg


def rates_for(spec: NetworkSpec) -> Rates:
    """Rate form of the spec, synthesised as ``lambda=1, p_i=1/n, mu_i=kappa_i/n`` if absent."""
    if spec.rates is not None:
        return spec.rates
    kap = spec.queue_kappas()
    if np.any(kap <= 0):
        raise ValueError("dynamic simulation needs every kappa > 0")
    n = kap.size
    return Rates(1.0, tuple([1.0 / n] * n), tuple((kap / n).tolist()))


@numba.njit(cache=True, nogil=True)
def _ctmc_steps(state, hub, lam, p_cum, mu_cum, mu_tot, rate_tot, u, step, burn, interval,
                out, n_rec, max_hist, state_hist, radix):
    n = state.size
    nsteps = u.size // 2
    for s in range(nsteps):
        x = u[2 * s] * rate_tot
        hub_rate = hub * lam
        if x < hub_rate:
            i = np.searchsorted(p_cum, u[2 * s + 1], side="right")
            if i >= n:
                i = n - 1
            state[i] += 1
            hub -= 1
        else:
            y = x - hub_rate
            if y < mu_tot:
                i = np.searchsorted(mu_cum, y, side="right")
                if i >= n:
                    i = n - 1
                if state[i] > 0:
                    state[i] -= 1
                    hub += 1
        step += 1
        if step > burn:
            mx = 0
            for q in range(n):
                if state[q] > mx:
                    mx = state[q]
            max_hist[mx] += 1
            if state_hist.size > 0:
                code = 0
                for q in range(n):
                    code = code * radix + state[q]
                state_hist[code] += 1
            if (step - burn) % interval == 0 and n_rec < out.shape[0]:
                for q in range(n):
                    out[n_rec, q] = state[q]
                n_rec += 1
    return hub, step, n_rec


def _ctmc_stream(spec: NetworkSpec, rates: Rates, cfg: CtmcConfig, rows: int, rng: np.random.Generator):
    n, m = spec.n, spec.m
    lam = float(rates.lam)
    p_cum = np.cumsum(np.asarray(rates.p, dtype=float))
    p_cum[-1] = 1.0
    mu = np.asarray(rates.mu, dtype=float)
    mu_cum = np.cumsum(mu)
    mu_tot = float(mu_cum[-1])
    rate_tot = m * lam + mu_tot
    radix = m + 1
    hist_states = radix**n if n * math.log(radix) < math.log(_HIST_MAX_STATES) + 1e-9 else 0
    state = np.zeros(n, dtype=np.int64)
    hub = m
    out = np.zeros((rows, n), dtype=np.int64)
    max_hist = np.zeros(m + 1, dtype=np.int64)
    state_hist = np.zeros(hist_states, dtype=np.int64)
    total = cfg.burn_in_events + rows * cfg.sample_interval_events
    step, n_rec = 0, 0
    while step < total:
        todo = min(_STEP_CHUNK, total - step)
        u = rng.random(2 * todo)
        hub, step, n_rec = _ctmc_steps(state, hub, lam, p_cum, mu_cum, mu_tot, rate_tot, u, step,
                                       cfg.burn_in_events, cfg.sample_interval_events, out, n_rec,
                                       max_hist, state_hist, radix)
    return out, max_hist, state_hist


def simulate_ctmc(spec: NetworkSpec, config: CtmcConfig | None = None, seed: int = DEFAULT_SEED, workers: int = 1) -> SampleBatch:
    """Simulate the network dynamics and record states after a burn-in.

    The chain is uniformised at the constant rate ``m lambda + sum mu``:
    each event is a hub completion, a service completion or a null event,
    so the average over events equals the time average.  ``occupancy``
    carries those averages: the law of the maximum and, for state spaces
    up to about a million points, the joint law.
    """
    cfg = (config or CtmcConfig()).resolved(spec.n)
    rates = rates_for(spec)
    gens = stream_generators(seed, cfg.streams)
    sizes = _split(cfg.replications, cfg.streams)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        res = list(pool.map(lambda a: _ctmc_stream(spec, rates, cfg, a[0], a[1]), zip(sizes, gens)))
    samples = np.concatenate([r[0] for r in res], axis=0)
    max_hist = np.sum([r[1] for r in res], axis=0)
    occ: dict = {"events": int(max_hist.sum()), "max": max_hist / max_hist.sum()}
    if res[0][2].size:
        sh = np.sum([r[2] for r in res], axis=0)
        occ["joint"] = sh / sh.sum()
        occ["radix"] = spec.m + 1
    ids = np.repeat(np.arange(cfg.streams), sizes)
    return SampleBatch(samples, int(seed), ids, ENGINE_CTMC, spec, occ)


def joint_from_occupancy(batch: SampleBatch) -> dict[tuple[int, ...], float]:
    """Time-average joint law from a CTMC batch, restricted to feasible states."""
    occ = batch.occupancy or {}
    if "joint" not in occ:
        raise ValueError("batch carries no joint occupancy")
    n, radix = batch.spec.n, occ["radix"]
    out = {}
    for code in np.nonzero(occ["joint"])[0]:
        digits, c = [], int(code)
        for _ in range(n):
            c, d = divmod(c, radix)
            digits.append(d)
        out[tuple(reversed(digits))] = float(occ["joint"][code])
    return out


def empirical_joint(batch: SampleBatch) -> dict[tuple[int, ...], float]:
    states, counts = np.unique(batch.samples, axis=0, return_counts=True)
    tot = counts.sum()
    return {tuple(int(x) for x in s): c / tot for s, c in zip(states, counts)}


def total_variation(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * math.fsum(abs(float(p.get(k, 0.0)) - float(q.get(k, 0.0))) for k in keys)


# ---------------------------------------------------- statistics


@dataclass
class ExtremeSummary:
    count: int
    mean: float
    variance: float
    mean_stderr: float
    pmf: Pmf
    gumbel_x: np.ndarray = field(repr=False)
    gumbel_ecdf: np.ndarray = field(repr=False)
    gumbel_band: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "mean": self.mean,
            "variance": self.variance,
            "mean_stderr": self.mean_stderr,
            "max_pmf": self.pmf.to_dict(),
            "gumbel": {
                "x": self.gumbel_x.tolist(),
                "ecdf": self.gumbel_ecdf.tolist(),
                "stderr": self.gumbel_band.tolist(),
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _batch_means_stderr(x: np.ndarray, batches: int = 20) -> float:
    if x.size < 2 * batches:
        return float(np.std(x, ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
    usable = (x.size // batches) * batches
    means = x[:usable].reshape(batches, -1).mean(axis=1)
    return float(np.std(means, ddof=1) / math.sqrt(batches))


def gumbel_rescaled(batch: SampleBatch) -> np.ndarray:
    """``n_1 max / (m - E hub - E non-bottleneck) - ln n_1`` per row."""
    spec = batch.spec
    spread = spec.centred_load()
    if spread <= 0:
        raise ValueError("Gumbel rescaling needs m above the mean hub + non-bottleneck load")
    return spec.n1 * batch.maxima / spread - math.log(spec.n1)


def extreme_stats(batch: SampleBatch, grid: np.ndarray | None = None) -> ExtremeSummary:
    """Moments and law of the per-row maximum plus its Gumbel-rescaled ECDF.

    Standard errors are i.i.d. for exact draws and batch-means for CTMC
    output, whose rows are correlated.
    """
    mx = batch.maxima.astype(float)
    if mx.size == 0:
        raise ValueError("empty batch")
    lo = int(mx.min())
    counts = np.bincount((mx - lo).astype(np.int64))
    pmf = Pmf.from_masses(lo, counts / counts.sum())
    if batch.engine == ENGINE_CTMC:
        se = _batch_means_stderr(mx)
        n_eff = max(2.0, mx.size * (np.var(mx) / mx.size) / se**2) if se > 0 else float(mx.size)
    else:
        se = float(np.std(mx, ddof=1) / math.sqrt(mx.size)) if mx.size > 1 else 0.0
        n_eff = float(mx.size)
    if grid is None:
        grid = np.linspace(-2.0, 6.0, 33)
    try:
        z = np.sort(gumbel_rescaled(batch))
        ecdf = np.searchsorted(z, grid, side="right") / z.size
    except ValueError:
        ecdf = np.full(grid.shape, np.nan)
    band = np.sqrt(np.clip(ecdf * (1 - ecdf), 0, None) / n_eff)
    return ExtremeSummary(int(mx.size), float(mx.mean()), float(mx.var()), se, pmf, np.asarray(grid, float), ecdf, band)
