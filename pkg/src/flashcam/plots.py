"""Matplotlib rendering of consistency reports.

Figures are written next to the CSV/JSON output by the CLI report paths:
SSIM and PSNR time series per condition, plus the scene-illuminance trace.
Rendering goes through an explicit Agg canvas (no pyplot, no display) and
strips date metadata so output bytes are reproducible.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence

from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .metrics import ReportRow

_CONDITION_STYLE = {
    "AL": {"color": "#1f77b4", "marker": "o"},
    "NL": {"color": "#d62728", "marker": "s"},
    "HDR": {"color": "#2ca02c", "marker": "^"},
}
_SAVE_OPTS = {"dpi": 120, "metadata": {"Date": None}}


def _grouped(rows: Iterable[ReportRow]) -> dict[str, list[ReportRow]]:
    groups: dict[str, list[ReportRow]] = {}
    for row in rows:
        groups.setdefault(row.condition, []).append(row)
    return groups


def _timeseries_figure(groups: dict[str, list[ReportRow]], value, ylabel: str,
                       title: str) -> Figure:
    fig = Figure(figsize=(6.0, 3.6))
    FigureCanvasAgg(fig)
    ax = fig.add_subplot(1, 1, 1)
    for cond, rows in groups.items():
        style = _CONDITION_STYLE.get(cond, {})
        ax.plot([r.time_min for r in rows], [value(r) for r in rows],
                label=cond, markersize=4, **style)
    ax.set_xlabel("time from noon [min]")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    return fig


def save_report_figures(rows: Sequence[ReportRow], out_dir: str | Path,
                        stem: str = "report") -> list[Path]:
    """Render SSIM / PSNR / illuminance time-series PNGs for report rows."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    groups = _grouped(rows)
    written: list[Path] = []

    fig = _timeseries_figure(groups, lambda r: r.ssim_pct, "SSIM [%]",
                             "Consistency vs noon reference")
    path = out_dir / f"{stem}_ssim.png"
    fig.savefig(path, **_SAVE_OPTS)
    written.append(path)

    fig = _timeseries_figure(groups, lambda r: r.psnr_db, "PSNR [dB]",
                             "PSNR vs noon reference")
    path = out_dir / f"{stem}_psnr.png"
    fig.savefig(path, **_SAVE_OPTS)
    written.append(path)

    first = next(iter(groups.values()), [])
    if first and any(r.scene_scale for r in first):
        fig = Figure(figsize=(6.0, 3.0))
        FigureCanvasAgg(fig)
        ax = fig.add_subplot(1, 1, 1)
        ax.plot([r.time_min for r in first], [r.scene_scale for r in first],
                color="#7f7f7f", marker=".")
        ax.set_xlabel("time from noon [min]")
        ax.set_ylabel("scene illuminance [rel]")
        ax.set_title("Ambient light over the day")
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        path = out_dir / f"{stem}_illuminance.png"
        fig.savefig(path, **_SAVE_OPTS)
        written.append(path)
    return written
