"""Figures for simulation traces. Uses the non-interactive Agg backend."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def plot_trace(trace, path, names=None, lower=None, upper=None, title=None):
    """Utility-targets over time, one line per bidder; optional convergence bands."""
    states = np.array(trace.states())
    n = states.shape[1]
    names = names or [f"bidder {i}" for i in range(n)]
    fig, ax = plt.subplots(figsize=(7, 4))
    steps = np.arange(len(states))
    for i in range(n):
        line, = ax.plot(steps, states[:, i], lw=1.2, label=names[i])
        if lower is not None and upper is not None:
            ax.axhspan(lower[i], upper[i], color=line.get_color(), alpha=0.12, lw=0)
    lowers = [k for k, e in enumerate(trace.events, start=1) if e.direction == "lower"]
    if lowers and len(lowers) < 400:
        for k in lowers:
            ax.axvline(k, color="0.85", lw=0.5, zorder=0)
    ax.set_xlabel("step")
    ax.set_ylabel("utility-target")
    if title:
        ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_gfp(gfp_trace, path, title=None, window=None):
    """Per-click GFP bids over time, with the detected cycle shaded."""
    bids = gfp_trace.bids()
    if window:
        bids = bids[:window]
    fig, ax = plt.subplots(figsize=(7, 4))
    for i in range(bids.shape[1]):
        ax.step(np.arange(len(bids)), bids[:, i], where="post", lw=1.1, label=f"bidder {i}")
    if gfp_trace.cycle_start is not None:
        lo = gfp_trace.cycle_start
        hi = min(lo + gfp_trace.cycle_length, len(bids) - 1)
        ax.axvspan(lo, hi, color="0.9", zorder=0, label="fixed point" if gfp_trace.fixed_point else "cycle")
    ax.set_xlabel("step")
    ax.set_ylabel("per-click bid")
    if title:
        ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
