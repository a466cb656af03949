"""Scalar kernels: log-space arithmetic, gamma-function differences,
harmonic sums and the root/maximisation solvers used by the other modules."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.special import gammaln

from .errors import NoAdmissibleRoot, NoSignChange, UnboundedSupremumWarning

ROOT_XTOL = 1e-10
ROOT_FTOL = 1e-12
THETA_CAP = 50.0

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_STIRLING_MIN = 20.0


@dataclass(frozen=True, order=True)
class LogWeight:
    """A nonnegative number stored as its natural logarithm.

    ``LogWeight(-inf)`` is exact zero.
    """

    log_value: float

    @classmethod
    def zero(cls) -> "LogWeight":
        return cls(-math.inf)

    @classmethod
    def one(cls) -> "LogWeight":
        return cls(0.0)

    @classmethod
    def from_value(cls, x: float) -> "LogWeight":
        if x < 0:
            raise ValueError("LogWeight holds nonnegative values only")
        return cls(math.log(x) if x > 0 else -math.inf)

    @property
    def value(self) -> float:
        return math.exp(self.log_value)

    @property
    def is_zero(self) -> bool:
        return self.log_value == -math.inf

    def __mul__(self, other: "LogWeight") -> "LogWeight":
        if self.is_zero or other.is_zero:
            return LogWeight.zero()
        return LogWeight(self.log_value + other.log_value)

    def __truediv__(self, other: "LogWeight") -> "LogWeight":
        if other.is_zero:
            raise ZeroDivisionError("division by LogWeight zero")
        if self.is_zero:
            return self
        return LogWeight(self.log_value - other.log_value)

    def __add__(self, other: "LogWeight") -> "LogWeight":
        return LogWeight(float(np.logaddexp(self.log_value, other.log_value)))

    def __pow__(self, p: float) -> "LogWeight":
        if self.is_zero:
            return self if p > 0 else LogWeight.one()
        return LogWeight(self.log_value * p)


def _as_log(t) -> float:
    return t.log_value if isinstance(t, LogWeight) else float(t)


def log_sum_exp(terms: Iterable[LogWeight | float]) -> LogWeight:
    """log(sum(exp(t))) with the running maximum factored out."""
    logs = np.fromiter((_as_log(t) for t in terms), dtype=float)
    return LogWeight(log_sum_exp_array(logs))


def log_sum_exp_array(logs: np.ndarray, axis=None):
    """Array form of :func:`log_sum_exp`; all ``-inf`` (or empty) gives ``-inf``."""
    logs = np.asarray(logs, dtype=float)
    if logs.size == 0:
        return -math.inf
    top = np.max(logs, axis=axis, keepdims=True)
    safe = np.where(np.isfinite(top), top, 0.0)
    with np.errstate(under="ignore"):
        s = np.sum(np.exp(logs - safe), axis=axis, keepdims=True)
    with np.errstate(divide="ignore"):
        out = np.log(s) + safe
    out = np.where(np.isneginf(top), -np.inf, out)
    if axis is None:
        return float(out.reshape(()))
    return np.squeeze(out, axis=axis)


def _stirling_tail(z):
    iz = 1.0 / z
    iz2 = iz * iz
    return iz * (1 / 12 - iz2 * (1 / 360 - iz2 * (1 / 1260 - iz2 * (1 / 1680 - iz2 / 1188))))


def _lgamma_diff_large(x, h):
    # x >= 20 and h >= 0
    return (
        (x - 0.5) * np.log1p(h / x)
        + h * np.log(x + h)
        - h
        + _stirling_tail(x + h)
        - _stirling_tail(x)
    )


def log_gamma_diff(x, h):
    """``lgamma(x + h) - lgamma(x)`` for ``x > 0``, ``h >= 0``.

    Accurate to a few ulps of the *result* even when both gamma values are
    huge, which plain ``gammaln`` differences are not.
    """
    x, h = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(h, dtype=float))
    out = np.empty(x.shape)
    big = x >= _STIRLING_MIN
    small_total = (~big) & (x + h < 2 * _STIRLING_MIN)
    shifted = (~big) & ~small_total
    if big.any():
        out[big] = _lgamma_diff_large(x[big], h[big])
    if small_total.any():
        xs, hs = x[small_total], h[small_total]
        out[small_total] = gammaln(xs + hs) - gammaln(xs)
    if shifted.any():
        xs, hs = x[shifted], h[shifted]
        out[shifted] = (gammaln(xs + _STIRLING_MIN) - gammaln(xs)) + _lgamma_diff_large(
            xs + _STIRLING_MIN, hs - _STIRLING_MIN
        )
    return out if out.ndim else float(out)


def log_falling_factorial(n: float, k: int) -> LogWeight:
    """ln of ``n (n-1) ... (n-k+1)``; zero weight if a factor vanishes."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k == 0:
        return LogWeight.one()
    low = n - k + 1
    if low <= 0:
        if float(n).is_integer() and n >= 0:
            return LogWeight.zero()
        raise ValueError("falling factorial with non-integral n and k > n + 1 may be negative")
    return LogWeight(float(log_gamma_diff(low, k)))


def log_falling_factorial_array(n, k):
    """Vectorised ln (n)_k; ``-inf`` where a factor is zero (requires n >= k - 1)."""
    n, k = np.broadcast_arrays(np.asarray(n, dtype=float), np.asarray(k, dtype=float))
    low = n - k + 1
    out = np.full(n.shape, -np.inf)
    ok = low > 0
    out[ok] = log_gamma_diff(low[ok], k[ok])
    out[k == 0] = 0.0
    return out


def log_binom(a, b):
    """ln C(a, b) for real ``a >= b >= 0``; ``-inf`` outside that range."""
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    out = np.full(a.shape, -np.inf)
    ok = (b >= 0) & (a - b >= 0)
    if ok.any():
        aa, bb = a[ok], b[ok]
        bb = np.minimum(bb, aa - bb)
        out[ok] = log_gamma_diff(aa - bb + 1, bb) - gammaln(bb + 1)
    return out if out.ndim else float(out)


def harmonic(n: int, k: int = 1) -> float:
    """Partial sum ``sum_{i=1}^n i^{-k}``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    i = np.arange(1, n + 1, dtype=float)
    return math.fsum(i ** (-k))


@dataclass(frozen=True)
class QuadraticRoots:
    coefficients: tuple[float, float, float]
    roots: tuple[float, ...]
    selected: float | None = None

    def residual(self, r: float) -> float:
        a, b, c = self.coefficients
        return a * r * r + b * r + c


def solve_quadratic_positive(a: float, b: float, c: float, lower_bound: float) -> QuadraticRoots:
    """Real roots of ``a r^2 + b r + c`` and the unique one above ``lower_bound``.

    Uses the sign-matched form ``q = -(b + sign(b) sqrt(D)) / 2`` so neither
    root suffers cancellation.
    """
    if a == 0 and b == 0:
        raise ValueError("degenerate polynomial")
    if a == 0:
        roots: tuple[float, ...] = (-c / b,)
    else:
        disc = b * b - 4 * a * c
        if disc < 0:
            roots = ()
        elif disc == 0:
            roots = (-b / (2 * a),)
        else:
            sq = math.sqrt(disc)
            q = -0.5 * (b + math.copysign(sq, b))
            if q == 0:
                roots = (0.0, 0.0)
            else:
                roots = tuple(sorted((q / a, c / q)))
    above = [r for r in roots if r > lower_bound]
    if len(above) != 1:
        raise NoAdmissibleRoot(
            f"expected exactly one root above {lower_bound}, found {len(above)} in {roots}"
        )
    return QuadraticRoots((a, b, c), roots, above[0])


def find_root_monotone(
    f: Callable[[float], float],
    bracket: Sequence[float],
    tol: float = ROOT_XTOL,
    ftol: float = ROOT_FTOL,
) -> float:
    """Root of a continuous monotone ``f`` on ``bracket``.

    Bisection until the bracket is small, then secant steps that are
    rejected in favour of bisection whenever they leave the bracket.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if flo * fhi > 0:
        raise NoSignChange(f"f({lo})={flo:g} and f({hi})={fhi:g} share a sign")
    coarse = max(math.sqrt(tol) * (hi - lo), tol)
    for _ in range(400):
        width = hi - lo
        if width <= tol * max(1.0, abs(lo)):
            break
        if width > coarse:
            x = 0.5 * (lo + hi)
        else:
            x = hi - fhi * (hi - lo) / (fhi - flo)
            if not lo < x < hi:
                x = 0.5 * (lo + hi)
        fx = f(x)
        if abs(fx) <= ftol:
            return x
        if (fx < 0) == (flo < 0):
            lo, flo = x, fx
        else:
            hi, fhi = x, fx
        if width <= coarse and hi - lo > 0.5 * width:
            # secant stalled on one side; force a bisection step
            mid = 0.5 * (lo + hi)
            fm = f(mid)
            if (fm < 0) == (flo < 0):
                lo, flo = mid, fm
            else:
                hi, fhi = mid, fm
    return lo if abs(flo) < abs(fhi) else hi


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class _Sup:
    value: float
    argmax: float
    at_cap: bool = field(default=False)


def _golden_max(phi: Callable[[float], float], lo: float, hi: float, iters: int = 120) -> _Sup:
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = phi(c), phi(d)
    for _ in range(iters):
        if b - a <= 1e-14 * max(1.0, abs(a)):
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = phi(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = phi(d)
    cands = [(phi(lo), lo), (fc, c), (fd, d), (phi(hi), hi)]
    best = max(cands)
    return _Sup(best[0], best[1])


def legendre_fenchel(
    log_mgf: Callable[[float], float], x: float, theta_cap: float = THETA_CAP
) -> float:
    """``sup_{0 <= theta <= cap} { -theta x - log_mgf(theta) }``.

    ``log_mgf`` must be convex with ``log_mgf(0) == 0``, so the objective is
    concave and golden-section search applies.  Emits
    :class:`UnboundedSupremumWarning` when the maximiser reaches the cap.
    """
    sup = _golden_max(lambda th: -th * x - log_mgf(th), 0.0, theta_cap)
    if sup.argmax >= theta_cap * (1 - 1e-9):
        warnings.warn(
            f"rate-function maximiser hit theta cap {theta_cap} at x={x}",
            UnboundedSupremumWarning,
            stacklevel=2,
        )
    return max(sup.value, 0.0)
