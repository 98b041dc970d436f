"""Figure rendering for experiment results."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .harness import collect_series

__all__ = ["render_risk_curves"]

_X_LABELS = {
    "epsilon": "privacy parameter epsilon",
    "n": "sample size n",
    "s_star": "target sparsity s*",
}


def render_risk_curves(aggregates, path, title: str | None = None) -> None:
    """Render mean excess-risk curves to an image file, one line per series."""
    x_name, series = collect_series(aggregates)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for label, pts in series:
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        ax.plot(xs, ys, marker="o", label=label)
    ax.set_xlabel(_X_LABELS.get(x_name, x_name))
    ax.set_ylabel("mean excess empirical risk")
    if title:
        ax.set_title(title)
    if len(series) > 1 or series[0][0]:
        ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
