"""Matplotlib figures written next to the report tables.

Figures are built on the object API with an Agg canvas so nothing touches
global pyplot state or needs a display.
"""

from __future__ import annotations

import math

import matplotlib as mpl
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "lines.linewidth": 1.4,
}
COLORS = {"actual": "0.15", "eims": "#d95f02", "edms": "#1b9e77"}
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _new_figure(width: float = 6.0, height: float | None = None):
    fig = Figure(figsize=(width, height or width * GOLDEN))
    FigureCanvasAgg(fig)
    return fig, fig.add_subplot(1, 1, 1)


def _save(fig, path, dpi: int = 120):
    # no Software/date metadata so reruns produce identical files
    fig.savefig(path, dpi=dpi, bbox_inches="tight", metadata={"Software": None})


def plot_forecast(path, steps, actual, eims=None, edms=None, title: str = ""):
    """Held-out actuals against the EIMS and EDMS forecasts."""
    with mpl.rc_context(STYLE):
        fig, ax = _new_figure()
        ax.plot(steps, actual, color=COLORS["actual"], label="actual")
        if eims is not None:
            ax.plot(steps, eims, color=COLORS["eims"], linestyle="--", label="EIMS")
        if edms is not None:
            ax.plot(steps, edms, color=COLORS["edms"], label="EDMS")
        ax.set_xlabel("forecast step")
        ax.set_ylabel("value")
        if title:
            ax.set_title(title)
        ax.legend(frameon=False)
        _save(fig, path)


def plot_delta_bars(path, rows, title: str = ""):
    """Horizontal bars of the per-dataset MAPE reduction."""
    labels = [r["dataset"] for r in rows]
    deltas = [r["delta_percent"] if math.isfinite(r["delta_percent"]) else 0.0 for r in rows]
    with mpl.rc_context(STYLE):
        fig, ax = _new_figure(height=max(1.5, 0.4 * len(rows) + 1.0))
        colors = [COLORS["edms"] if d >= 0 else COLORS["eims"] for d in deltas]
        ax.barh(range(len(rows)), deltas, color=colors)
        ax.set_yticks(range(len(rows)), labels)
        ax.axvline(0.0, color="0.3", linewidth=0.8)
        ax.invert_yaxis()
        ax.set_xlabel("MAPE reduction of EDMS over EIMS (%)")
        if title:
            ax.set_title(title)
        _save(fig, path)
