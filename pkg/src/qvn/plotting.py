"""Matplotlib figures for the report path. Uses the non-interactive Agg backend."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .models import FIG_CLOCKS, ShorArch, ShorModel, shor_time  # noqa: E402
from .physics import CoilKind, CoilSystem, field_at  # noqa: E402
from .sim import EventTrace, stage_spans  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def timeline_figure(trace: EventTrace, path):
    """Gantt chart with one lane per pipeline stage and per detection zone."""
    lanes = list(trace.stage_labels) + list(trace.detection_zones)
    spans = stage_spans(trace)
    fig, ax = plt.subplots(figsize=(10, 0.35 * len(lanes) + 1.2))
    cmap = plt.get_cmap("tab20")
    for i, lane in enumerate(lanes):
        bars = [(a / 1e3, (b - a) / 1e3) for name, a, b, _ in spans if name == lane]
        colors = [cmap(min(s) % 20) for name, _, _, s in spans if name == lane]
        if bars:
            ax.broken_barh(bars, (i - 0.4, 0.8), facecolors=colors)
    ax.set_yticks(range(len(lanes)))
    ax.set_yticklabels(lanes)
    ax.invert_yaxis()
    ax.set_xlabel("time (us)")
    ax.set_title("pipeline occupancy")
    return _save(fig, path)


def shor_figure(path, n_max: float = 1e5, clocks=None):
    clocks = clocks or FIG_CLOCKS
    n = np.logspace(1, np.log10(n_max), 200)
    fig, ax = plt.subplots(figsize=(6, 4))
    for arch in ShorArch:
        model = ShorModel(arch, clocks[arch])
        ax.loglog(n, [shor_time(model, x) for x in n], label=f"{arch.value} ({clocks[arch]:g} Hz)")
    ax.set_xlabel("bits to factor")
    ax.set_ylabel("runtime (s)")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    return _save(fig, path)


def coil_figure(path, r_max: float = 0.15, n: int = 121):
    """Relative field deviation along and across the axis for both coil kinds."""
    x = np.linspace(0, r_max, n)
    fig, ax = plt.subplots(figsize=(6, 4))
    for kind in CoilKind:
        coils = CoilSystem(kind)
        b0 = np.linalg.norm(field_at(coils, [0.0, 0.0, 0.0]))
        for axis, style in ((2, "-"), (0, "--")):
            pts = np.zeros((n, 3))
            pts[:, axis] = x
            dev = np.abs(np.linalg.norm(field_at(coils, pts), axis=1) / b0 - 1)
            ax.semilogy(x[1:], dev[1:], style, label=f"{kind.value} {'axial' if axis == 2 else 'radial'}")
    ax.axhline(1e-6, color="k", lw=0.8)
    ax.set_xlabel("distance from centre / R")
    ax.set_ylabel("|B/B0 - 1|")
    ax.legend(fontsize=8)
    return _save(fig, path)
