"""Figure rendering for experiment and study reports.

Figures are written next to the delimited output; nothing here feeds back
into the numerics.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .analytics import RatioRow
from .simulate import ExperimentReport


def overshoot_histogram(
    report: ExperimentReport, alpha: float, out_path: str, bins: int | None = None
) -> str:
    """Histogram of overshoot samples with the log(1+alpha) bound marked."""
    samples = np.asarray(report.overshoot_samples, dtype=float)
    bound = math.log1p(alpha) if alpha > 0 else None
    if bins is None:
        bins = 50
    fig, ax = plt.subplots(figsize=(7, 4.5))
    if samples.size:
        if bound:
            edges = np.linspace(0.0, bound, bins + 1)
        else:
            hi = max(float(samples.max()), 1e-9)
            edges = np.linspace(0.0, hi, bins + 1)
        ax.hist(samples, bins=edges, color="steelblue", edgecolor="white")
    if bound:
        ax.axvline(bound, color="crimson", linestyle="--", label=f"log(1+alpha) = {bound:.4g}")
        ax.legend()
    ax.set_xlabel("overshoot of log wealth over log(level)")
    ax.set_ylabel("count")
    ax.set_title(f"Overshoot distribution ({report.reps} replications)")
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)
    return out_path


def market_time_histogram(report: ExperimentReport, lower: float, upper: float, out_path: str) -> str:
    """Histogram of market-time samples with the theoretical bounds marked."""
    samples = report.T[report.reached]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    if samples.size:
        ax.hist(samples, bins=60, color="steelblue", edgecolor="white")
    ax.axvline(lower, color="crimson", linestyle="--", label=f"lower bound {lower:.4g}")
    if upper > lower:
        ax.axvline(upper, color="darkorange", linestyle="--", label=f"upper bound {upper:.4g}")
    ax.axvline(report.mean_T, color="black", label=f"mean {report.mean_T:.4g}")
    ax.set_xlabel("market time to upcross")
    ax.set_ylabel("count")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)
    return out_path


def ratio_plot(rows: list[RatioRow], out_path: str) -> str:
    """Ratio mean_T / log(level/x) versus level with the theoretical band."""
    levels = [r.level for r in rows if r.log_level > 0]
    ratios = [r.ratio for r in rows if r.log_level > 0]
    err = [3 * r.stderr_T / r.log_level for r in rows if r.log_level > 0]
    lo = [r.band_lo for r in rows if r.log_level > 0]
    hi = [r.band_hi for r in rows if r.log_level > 0]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.errorbar(levels, ratios, yerr=err, fmt="o-", color="steelblue", label="MC ratio")
    ax.plot(levels, lo, "--", color="gray", label="band")
    ax.plot(levels, hi, "--", color="gray")
    ax.set_xscale("log")
    ax.set_xlabel("wealth level")
    ax.set_ylabel("mean market time / log(level/x)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)
    return out_path
