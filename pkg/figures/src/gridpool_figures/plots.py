"""The three figure kinds, rendered deterministically.

Every function takes already-parsed rows, writes an SVG (and optionally a
PNG) and returns the plotted series so tests can assert on the numbers.
SVG output is reproducible byte for byte: fixed hash salt, no date
metadata, fixed figure geometry, and all numbers come straight from the
input CSV (least-squares fits are the only computation done here).
"""

from __future__ import annotations

import math

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .io import SchemaError

matplotlib.rcParams.update({
    "svg.hashsalt": "gridpool-figures",
    "figure.figsize": (8.0, 4.8),
    "figure.dpi": 100,
    "savefig.dpi": 100,
    "font.family": "DejaVu Sans",
    "axes.grid": True,
    "grid.alpha": 0.3,
})

K_COLORS = ["tab:blue", "tab:orange", "tab:green", "tab:red", "tab:purple"]
EPS_COLORS = ["tab:blue", "tab:purple", "black"]


def _save(fig, out_svg, out_png=None):
    fig.savefig(out_svg, format="svg", metadata={"Date": None})
    if out_png:
        fig.savefig(out_png, format="png")
    plt.close(fig)


def _k_label(k):
    return "K=inf" if math.isinf(k) else f"K={int(k)}"


def plot_rates_vs_l(rows, out_svg, out_png=None, lam=None):
    """Two panels: miss-rate and false-positive-rate curves vs L, one per K."""
    if lam is not None:
        rows = [r for r in rows if abs(r["lambda"] - lam) < 1e-12]
    if not rows:
        raise SchemaError("no rows left after the lambda filter")
    lams = {r["lambda"] for r in rows}
    if len(lams) != 1:
        raise SchemaError(f"rates file mixes several lambda values: {sorted(lams)}")
    ks = sorted({r["K"] for r in rows}, key=float)
    fig, (ax_fn, ax_fp) = plt.subplots(1, 2, figsize=(9.6, 4.4))
    series = {}
    for idx, k in enumerate(ks):
        sub = sorted((r for r in rows if r["K"] == k), key=lambda r: r["L"])
        ls = [r["L"] for r in sub]
        color = K_COLORS[idx % len(K_COLORS)]
        fnr = [r["fnr"] for r in sub]
        fpr = [r["fpr"] for r in sub]
        ax_fn.plot(ls, fnr, marker="o", ms=3, color=color, label=_k_label(k))
        ax_fp.plot(ls, fpr, marker="o", ms=3, color=color, label=_k_label(k))
        series[_k_label(k)] = {"L": ls, "fnr": fnr, "fpr": fpr}
    lam_value = lams.pop()
    ax_fn.set_xlabel("pools per item L")
    ax_fn.set_ylabel("false negative rate")
    ax_fn.set_title(f"miss rate, pool intensity {lam_value:.4g}")
    ax_fp.set_xlabel("pools per item L")
    ax_fp.set_ylabel("false positive rate bound")
    ax_fp.set_title("false positive rate")
    ax_fn.legend(fontsize=8)
    ax_fp.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, out_svg, out_png)
    return series


def fit_line(xs, ys):
    """Plain least squares; exact on collinear input."""
    slope, intercept = np.polyfit(np.asarray(xs, float), np.asarray(ys, float), 1)
    return float(slope), float(intercept)


def _efficiency_series(rows, k_filter):
    grid = [r for r in rows if r["method"] == "grid"]
    if k_filter is not None:
        grid = [r for r in grid if r["K"] == k_filter]
    if not grid:
        raise SchemaError("no grid rows match the K filter")
    return grid


def plot_efficiency_vs_p(rows, out_svg, out_png=None, k_filter=None):
    """Optimized efficiency per tolerance with fits, plus both baselines."""
    grid = _efficiency_series(rows, k_filter)
    fig, ax = plt.subplots(figsize=(8.0, 5.2))
    series = {}
    epsilons = sorted({r["epsilon"] for r in grid})
    for idx, eps in enumerate(epsilons):
        sub = sorted((r for r in grid if r["epsilon"] == eps), key=lambda r: r["p"])
        ps = [r["p"] for r in sub]
        es = [r["efficiency"] for r in sub]
        color = EPS_COLORS[idx % len(EPS_COLORS)]
        ax.scatter(ps, es, s=28, color=color, label=f"grid, eps={eps:g}")
        entry = {"p": ps, "efficiency": es, "slope": None}
        if len(ps) >= 2:
            slope, intercept = fit_line(ps, es)
            xs = np.linspace(min(ps), max(ps), 50)
            ax.plot(xs, slope * xs + intercept, color=color, lw=1, alpha=0.8)
            entry["slope"] = slope
        else:
            print(f"warning: fewer than 2 points for eps={eps:g}; fit skipped")
        series[f"eps={eps:g}"] = entry
    for method, style, label in (("dorfman_theory", "k--", "two-stage optimum"),
                                 ("random_pool", "g-.", "random pools")):
        sub = sorted((r for r in rows if r["method"] == method), key=lambda r: r["p"])
        if sub:
            ps = [r["p"] for r in sub]
            es = [r["efficiency"] for r in sub]
            ax.plot(ps, es, style, lw=1.2, label=label)
            series[method] = {"p": ps, "efficiency": es}
    ax.set_xlabel("prevalence p")
    ax.set_ylabel("tests per item")
    ax.set_title("optimized efficiency vs prevalence")
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, out_svg, out_png)
    return series


def plot_choice_annotated(rows, out_svg, out_png=None, k_filter=None,
                          epsilon=None, label_field="n"):
    """Efficiency points annotated with the chosen grid side (or direction count)."""
    if label_field not in ("n", "L"):
        raise SchemaError(f"label must be 'n' or 'L', got {label_field!r}")
    grid = _efficiency_series(rows, k_filter)
    if epsilon is not None:
        grid = [r for r in grid if r["epsilon"] == epsilon]
        if not grid:
            raise SchemaError(f"no grid rows at epsilon={epsilon}")
    fig, ax = plt.subplots(figsize=(8.0, 5.2))
    series = {}
    for eps in sorted({r["epsilon"] for r in grid}):
        sub = sorted((r for r in grid if r["epsilon"] == eps), key=lambda r: r["p"])
        ps = [r["p"] for r in sub]
        es = [r["efficiency"] for r in sub]
        labels = [r[label_field] for r in sub]
        ax.scatter(ps, es, s=560, color="tab:blue", alpha=0.35, edgecolors="tab:blue")
        ax.plot(ps, es, color="tab:blue", lw=0.8, alpha=0.5)
        for p, e, txt in zip(ps, es, labels):
            ax.annotate(str(txt), (p, e), ha="center", va="center", fontsize=9)
        series[f"eps={eps:g}"] = {"p": ps, "efficiency": es, "labels": labels}
    ax.set_xlabel("prevalence p")
    ax.set_ylabel("tests per item")
    ax.set_title(f"chosen {label_field} along the efficiency curve")
    fig.tight_layout()
    _save(fig, out_svg, out_png)
    return series
