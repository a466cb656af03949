"""Optional figures for the CLI; needs the ``plot`` extra (matplotlib)."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np


def _pyplot():
    try:
        import matplotlib
    except ImportError as exc:  # pragma: no cover - depends on environment
        raise RuntimeError("plotting needs matplotlib: pip install 'artifact[plot]'") from exc
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_pmf(pmf, path: str | Path, title: str = "", xlabel: str = "value", mass_floor: float = 1e-12) -> Path:
    plt = _pyplot()
    keep = np.nonzero(pmf.masses > mass_floor)[0]
    lo, hi = (keep[0], keep[-1]) if keep.size else (0, len(pmf) - 1)
    x = pmf.support[lo : hi + 1]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(x, pmf.masses[lo : hi + 1], width=1.0 if x.size > 60 else 0.8, color="tab:blue")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("probability")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return Path(path)


def plot_max_samples(summary, path: str | Path, reference=None, title: str = "") -> Path:
    """Empirical law of the maximum, with an exact law overlaid when given."""
    plt = _pyplot()
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(10, 4))
    p = summary.pmf
    a1.bar(p.support, p.masses, width=0.8, alpha=0.6, label="sampled")
    if reference is not None:
        lo, hi = p.support[0], p.support[-1]
        idx = np.arange(max(lo - 2, 0), min(hi + 3, len(reference.masses)))
        a1.plot(idx, reference.masses[idx - reference.offset], "k.-", label="exact")
        a1.legend()
    a1.set_xlabel("max queue length")
    a1.set_ylabel("probability")
    if np.all(np.isfinite(summary.gumbel_ecdf)):
        xs = np.linspace(summary.gumbel_x.min(), summary.gumbel_x.max(), 200)
        a2.plot(xs, np.exp(-np.exp(-xs)), "k-", label="Gumbel")
        a2.errorbar(summary.gumbel_x, summary.gumbel_ecdf, yerr=2 * summary.gumbel_band, fmt="o", ms=3, label="empirical")
        a2.set_xlabel("rescaled max")
        a2.legend()
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return Path(path)


def plot_gumbel_table(rows, path: str | Path) -> Path:
    plt = _pyplot()
    n = np.array([r["n"] for r in rows], dtype=float)
    err = np.array([r["relative_error_pct"] for r in rows])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.loglog(n, err, "o-")
    ax.set_xlabel("n")
    ax.set_ylabel("relative variance error (%)")
    ax.axhline(0.0, color="grey", lw=0.5)
    ax.set_title(f"finite-n variance vs pi^2/6 = {math.pi ** 2 / 6:.4f}")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return Path(path)
