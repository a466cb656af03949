"""Uniform laws on discrete and continuous simplexes."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exact import Pmf, log_bounded_count
from .numerics import harmonic, log_binom


@dataclass(frozen=True)
class DiscreteSimplex:
    """Nonnegative integer ``n``-vectors summing to ``k``."""

    n: int
    k: int

    def __post_init__(self):
        if self.n < 1 or self.k < 0:
            raise ValueError("need n >= 1 and k >= 0")

    @property
    def cardinality(self) -> int:
        return math.comb(self.n + self.k - 1, self.n - 1)


@dataclass(frozen=True)
class ContinuousSimplex:
    """Nonnegative real ``n``-vectors summing to 1."""

    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need n >= 1")


def _divider_subsets(rng: np.random.Generator, slots: int, picks: int, rows: int) -> np.ndarray:
    """``rows`` uniformly random ``picks``-subsets of ``0..slots-1``, each sorted."""
    if picks == 0:
        return np.empty((rows, 0), dtype=np.int64)
    if picks * picks < slots:
        # sample with replacement and redraw rows that repeat a value
        out = np.empty((rows, picks), dtype=np.int64)
        todo = np.arange(rows)
        while todo.size:
            draw = np.sort(rng.integers(0, slots, size=(todo.size, picks)), axis=1)
            ok = np.all(np.diff(draw, axis=1) > 0, axis=1)
            out[todo[ok]] = draw[ok]
            todo = todo[~ok]
        return out
    if slots <= 64 * picks + 64:
        keys = rng.random((rows, slots))
        idx = np.argpartition(keys, picks - 1, axis=1)[:, :picks]
        return np.sort(idx, axis=1)
    out = np.empty((rows, picks), dtype=np.int64)
    for r in range(rows):
        out[r] = np.sort(rng.choice(slots, picks, replace=False, shuffle=False))
    return out


def sample_discrete(s: DiscreteSimplex, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Uniform draw(s) from the discrete simplex by stars and bars.

    ``n - 1`` bar positions are a uniform subset of the ``k + n - 1`` slots;
    part ``i`` is the number of stars between bars ``i - 1`` and ``i``.
    """
    rows = 1 if size is None else int(size)
    n, k = s.n, s.k
    bars = _divider_subsets(rng, k + n - 1, n - 1, rows)
    edges = np.concatenate(
        [np.full((rows, 1), -1, dtype=np.int64), bars, np.full((rows, 1), k + n - 1, dtype=np.int64)], axis=1
    )
    parts = np.diff(edges, axis=1) - 1
    return parts[0] if size is None else parts


def sample_continuous(s: ContinuousSimplex, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Uniform draw(s) from the unit simplex as normalised i.i.d. exponentials."""
    rows = 1 if size is None else int(size)
    z = rng.standard_exponential((rows, s.n))
    x = z / z.sum(axis=1, keepdims=True)
    return x[0] if size is None else x


def sample_continuous_max(
    s: ContinuousSimplex, rng: np.random.Generator, size: int, chunk_rows: int | None = None
) -> np.ndarray:
    """Maxima of ``size`` uniform unit-simplex draws, generated in fixed-size chunks.

    The chunking depends only on ``n`` so results do not depend on memory settings.
    """
    if chunk_rows is None:
        chunk_rows = max(1, 4_000_000 // s.n)
    out = np.empty(size)
    for start in range(0, size, chunk_rows):
        stop = min(size, start + chunk_rows)
        z = rng.standard_exponential((stop - start, s.n))
        out[start:stop] = z.max(axis=1) / z.sum(axis=1)
    return out


@dataclass(frozen=True)
class LocalLimit:
    exact: float
    gaussian_estimate: float

    @property
    def ratio(self) -> float:
        return self.exact / self.gaussian_estimate


def negbin_centre(n: int, p: float) -> int:
    """``floor(n p / (1 - p))``: the integer just below the mean of the sum."""
    return int(math.floor(n * p / (1.0 - p)))


def negbin_local_pmf(n: int, p: float, target: int) -> LocalLimit:
    """Point mass of a sum of ``n`` geometric(``p``) variables and its Gaussian estimate.

    Each summand has ``P[Y = y] = (1-p) p^y``; the estimate is
    ``1 / sqrt(2 pi n sigma^2)`` with ``sigma^2 = p / (1-p)^2``.
    """
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    if target < 0:
        exact = 0.0
    else:
        exact = math.exp(float(log_binom(target + n - 1, n - 1)) + n * math.log1p(-p) + target * math.log(p))
    var = p / (1.0 - p) ** 2
    return LocalLimit(exact, 1.0 / math.sqrt(2 * math.pi * n * var))


def discrete_max_cdf(s: DiscreteSimplex, j: int) -> float:
    """``P[max X <= j]`` for ``X`` uniform on the discrete simplex."""
    if j < 0:
        return 0.0
    if j >= s.k:
        return 1.0
    lb = log_bounded_count(s.k, s.n, j)
    return min(1.0, math.exp(lb - float(log_binom(s.k + s.n - 1, s.n - 1))))


def discrete_max_law(s: DiscreteSimplex) -> Pmf:
    """Law of the largest part, on ``0..k``."""
    jlo = -(-s.k // s.n)
    cdf = np.ones(s.k + 1)
    cdf[:jlo] = 0.0
    for j in range(jlo, s.k):
        cdf[j] = discrete_max_cdf(s, j)
        if cdf[j] >= 1.0 - 1e-15:
            break
    return Pmf.from_cdf(0, cdf)


def continuous_max_moments(s: ContinuousSimplex) -> tuple[float, float]:
    """Exact mean and variance of the largest coordinate."""
    n = s.n
    h1, h2 = harmonic(n), harmonic(n, 2)
    return h1 / n, (n * h2 - h1 * h1) / (n * n * (n + 1))


def gumbel_cdf(x):
    """Standard Gumbel CDF ``exp(-exp(-x))``."""
    with np.errstate(over="ignore"):
        out = np.exp(-np.exp(-np.asarray(x, dtype=float)))
    return float(out) if out.ndim == 0 else out


EULER_GAMMA = 0.5772156649015329
