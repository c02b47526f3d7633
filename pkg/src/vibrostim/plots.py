"""Matplotlib figure rendering for reports (always to files, never a GUI)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .rankstats import RankAggregate
from .synth import SampleBuffer, preview_minmax


def save_rank_boxplot(aggregate: RankAggregate, path: str | Path, title: str | None = None) -> Path:
    """Draw the per-stimulus rank distributions as boxplots (1 = strongest)."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(1.8 * len(aggregate.per_stimulus) + 2, 4))
    stats = [
        {
            "label": row.stimulus_id,
            "med": row.median,
            "q1": row.q1,
            "q3": row.q3,
            "whislo": row.whisker_low,
            "whishi": row.whisker_high,
            "fliers": list(row.outliers),
        }
        for row in aggregate.per_stimulus
    ]
    ax.bxp(stats, showfliers=True)
    ax.set_ylabel("answered rank (1 = strongest)")
    ax.set_ylim(len(aggregate.battery_ids) + 0.5, 0.5)  # strongest on top
    ax.yaxis.set_major_locator(plt.MultipleLocator(1))
    ax.set_title(title or f"rank distribution over {aggregate.n_sessions} session(s)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_waveform_preview(buffer: SampleBuffer, path: str | Path, title: str | None = None) -> Path:
    """Draw a buffer's min/max envelope over time."""
    path = Path(path)
    pairs = preview_minmax(buffer, min(2000, max(1, len(buffer))))
    lows = np.array([p[0] for p in pairs])
    highs = np.array([p[1] for p in pairs])
    t = np.linspace(0.0, buffer.duration, num=len(pairs))
    fig, ax = plt.subplots(figsize=(8, 3))
    ax.fill_between(t, lows, highs, linewidth=0.4, color="#3465a4")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("amplitude")
    ax.set_ylim(-1.05, 1.05)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
