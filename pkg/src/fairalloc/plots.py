"""Figure rendering for the CLI report path (matplotlib, Agg backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_SAVE_KW = dict(dpi=150, metadata={"Software": "fairalloc"})


def save_allocation_figure(allocations: dict[str, np.ndarray], path: str | Path) -> None:
    """Grouped bar chart of per-customer shares, one bar group per method."""
    methods = list(allocations)
    n = len(next(iter(allocations.values())))
    x = np.arange(1, n + 1)
    width = 0.8 / max(len(methods), 1)
    fig, ax = plt.subplots(figsize=(7, 4))
    for k, method in enumerate(methods):
        ax.bar(x + (k - (len(methods) - 1) / 2) * width, allocations[method], width, label=method)
    ax.set_xlabel("customer")
    ax.set_ylabel("cost share")
    ax.set_xticks(x)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_convergence_figure(samples, mape, max_pct, path: str | Path) -> None:
    """Error-versus-samples curves for a Monte Carlo convergence trace."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(samples, mape, marker="o", label="mean abs. % error")
    ax.plot(samples, max_pct, marker="s", label="max % error")
    ax.set_xscale("log")
    ax.set_xlabel("sampled permutations")
    ax.set_ylabel("error vs exact (%)")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_fairdiv_figure(expected: np.ndarray, empirical: np.ndarray,
                        envy_values, path: str | Path) -> None:
    """Expected-vs-empirical win frequencies plus the ex-post envy histogram."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    ax1.scatter(expected.ravel(), empirical.ravel(), s=18)
    lim = max(1.0, float(expected.max()), float(empirical.max()))
    ax1.plot([0, lim], [0, lim], color="gray", lw=1, ls="--")
    ax1.set_xlabel("expected win probability")
    ax1.set_ylabel("empirical frequency")

    envy_values = np.asarray(envy_values)
    bins = np.arange(envy_values.min() - 0.5, envy_values.max() + 1.5)
    ax2.hist(envy_values, bins=bins, rwidth=0.9)
    ax2.set_xlabel("max ex-post envy per run")
    ax2.set_ylabel("runs")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
