"""Static SVG figures for before/after SAPF comparisons."""

from __future__ import annotations

from pathlib import Path

import matplotlib
import numpy as np
from matplotlib.backends.backend_svg import FigureCanvasSVG
from matplotlib.figure import Figure

from .analysis import spectrum, thd
from .grid.trace import SimulationTrace

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.0,
    "svg.hashsalt": "sapfsim",  # stable element ids, so reruns are byte-identical
    "svg.fonttype": "none",
}

COLORS = {"source": "#1f4e79", "load": "#b03a2e", "sapf": "#1e8449", "pre": "#7f8c8d", "post": "#2874a6"}


def _save(fig: Figure, path: Path) -> Path:
    FigureCanvasSVG(fig)
    fig.savefig(path, format="svg", metadata={"Date": None})
    return path


def plot_engagement_currents(
    trace: SimulationTrace, engage_time: float, f0: float, path: str | Path, phase: str = "a",
    cycles_before: int = 3, cycles_after: int = 6,
) -> Path:
    """Source, load and injected current of one phase around the engage instant."""
    path = Path(path)
    dt = trace.dt
    i0 = max(0, trace.index_of(engage_time - cycles_before / f0))
    i1 = min(len(trace), trace.index_of(engage_time + cycles_after / f0))
    t_ms = 1e3 * trace.t[i0:i1]
    rows = (
        ("source", f"i_source_{phase}", "source current"),
        ("load", f"i_load_{phase}", "load current"),
        ("sapf", f"i_sapf_{phase}", "SAPF current"),
    )
    with matplotlib.rc_context(STYLE):
        fig = Figure(figsize=(7.0, 6.0))
        axes = fig.subplots(3, 1, sharex=True)
        for ax, (key, channel, label) in zip(axes, rows):
            ax.plot(t_ms, trace[channel][i0:i1], color=COLORS[key])
            ax.axvline(1e3 * engage_time, color="k", linestyle="--", linewidth=0.8)
            ax.set_ylabel(f"{label} [A]")
        axes[0].set_title(f"Phase {phase} currents around SAPF engagement (dt = {dt * 1e6:g} us)")
        axes[-1].set_xlabel("time [ms]")
        fig.tight_layout()
        return _save(fig, path)


def plot_spectra(
    trace: SimulationTrace, pre: tuple[float, float], post: tuple[float, float], f0: float,
    path: str | Path, channel: str = "i_source_a", cycles: int = 10, max_order: int = 50,
) -> Path:
    """Harmonic magnitudes (% of fundamental) before and after, side by side."""
    path = Path(path)
    dt = trace.dt
    specs = []
    for start, _ in (pre, post):
        i0 = trace.index_of(start)
        specs.append(spectrum(trace[channel][i0:], dt, f0, cycles, max_order))
    orders = np.arange(2, max_order + 1)
    width = 0.4
    with matplotlib.rc_context(STYLE):
        fig = Figure(figsize=(7.0, 3.6))
        ax = fig.subplots()
        for k, (spec, tag) in enumerate(zip(specs, ("pre", "post"))):
            pct = spec.percent_of_fundamental()[1:]
            label = f"{'without' if tag == 'pre' else 'with'} SAPF, THD = {100 * thd(spec):.2f}%"
            ax.bar(orders + (k - 0.5) * width, pct, width=width, color=COLORS[tag], label=label)
        ax.set_xlabel("harmonic order")
        ax.set_ylabel("magnitude [% of fundamental]")
        ax.set_title(f"Spectrum of {channel}")
        ax.set_xlim(1, max_order + 1)
        ax.legend()
        fig.tight_layout()
        return _save(fig, path)
