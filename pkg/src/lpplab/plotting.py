"""SVG figures for experiment results: tail curves and scaling fits."""

from __future__ import annotations

import math
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .experiments import ExperimentResult  # noqa: E402

# fixed ids in the SVG so reruns give identical files
matplotlib.rcParams["svg.hashsalt"] = "lpplab"


def _tail_groups(result: ExperimentResult):
    groups = defaultdict(list)
    for r in result.rows:
        if r["argument"] != "" and r["value_unit"] == "probability":
            groups[(r["statistic"], r["variant"], r["n"])].append((r["argument"], r["value"]))
    return groups


def _scalar_series(result: ExperimentResult, statistic: str):
    pts = [(r["n"], r["value"]) for r in result.rows
           if r["statistic"] == statistic and r["argument"] == ""]
    return sorted(pts)


# fit key in summary -> row statistic holding the per-n values
_SCALING = {"exponent": ("P(midpoint on geodesic)", "P(origin hit)"),
            "median_exponent": ("median TF",)}


def tail_figure(result: ExperimentResult):
    """Semi-log exceedance curves, one panel per statistic."""
    groups = _tail_groups(result)
    stats = sorted({k[0] for k in groups})
    if not stats:
        return None
    fig, axes = plt.subplots(1, len(stats), figsize=(5 * len(stats), 4), squeeze=False)
    for ax, stat in zip(axes[0], stats):
        for (s, variant, n), pts in sorted(groups.items()):
            if s != stat:
                continue
            xs = [p[0] for p in pts if p[1] > 0]
            ys = [p[1] for p in pts if p[1] > 0]
            if xs:
                label = f"n={n}" + (f" {variant}" if variant else "")
                ax.semilogy(xs, ys, marker="o", ms=3, label=label)
        ax.set_title(stat, fontsize=9)
        ax.set_xlabel("threshold")
        ax.set_ylabel("probability")
        ax.legend(fontsize=7)
    fig.tight_layout()
    return fig


def scaling_figure(result: ExperimentResult):
    """Log-log plot of a per-scale statistic with its fitted power law."""
    for key, candidates in _SCALING.items():
        fit = result.fits.get(key)
        if not fit or "error" in fit:
            continue
        for stat in candidates:
            pts = _scalar_series(result, stat)
            if len(pts) < 3:
                continue
            fig, ax = plt.subplots(figsize=(5, 4))
            ns = [p[0] for p in pts]
            ax.loglog(ns, [p[1] for p in pts], "o", label="estimate")
            line = [math.exp(fit["intercept"]) * n ** fit["estimate"] for n in ns]
            ax.loglog(ns, line, "-", label=f"slope {fit['estimate']:.3f} "
                                           f"[{fit['lo']:.3f}, {fit['hi']:.3f}]")
            ax.set_xlabel("n")
            ax.set_ylabel(stat)
            ax.legend(fontsize=8)
            fig.tight_layout()
            return fig
    return None


def save_figures(result: ExperimentResult, stem: str, description: str) -> list:
    """Write <stem>_tails.svg and <stem>_scaling.svg when there is data; return paths."""
    out = []
    meta = {"Date": None, "Creator": "lpplab", "Description": description}
    for suffix, make in (("tails", tail_figure), ("scaling", scaling_figure)):
        fig = make(result)
        if fig is None:
            continue
        path = f"{stem}_{suffix}.svg"
        fig.savefig(path, format="svg", metadata=meta)
        plt.close(fig)
        out.append(path)
    return out
