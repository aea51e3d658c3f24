"""Render rate-vs-SNR curve figures and 2-user rate-region figures."""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.patches import Polygon  # noqa: E402

from .csvdata import DataRow, read_rows  # noqa: E402
from .jobs import PlotJob  # noqa: E402

_COLORS = plt.rcParams["axes.prop_cycle"].by_key()["color"]


@dataclass(frozen=True)
class PlotResult:
    path: str
    figure: object


def plot(job: PlotJob) -> PlotResult:
    """Render the job; the output file appears only on success."""
    rows = read_rows(job.input_csv)  # raises before anything is written
    if job.kind == "rate_curves":
        fig = _rate_curves_figure(job, rows)
    else:
        fig = _region_figure(job, rows)
    _atomic_save(fig, job.output, job.dpi)
    return PlotResult(path=job.output, figure=fig)


def _finish_axes(ax, job: PlotJob):
    if job.title:
        ax.set_title(job.title)
    ax.set_xlabel(job.xlabel or "SNR (dB)")
    ax.set_ylabel(job.ylabel or "Rate (bits/s/Hz)")
    if job.xlim:
        ax.set_xlim(*job.xlim)
    if job.ylim:
        ax.set_ylim(*job.ylim)
    ax.grid(True, alpha=0.3, linestyle="--")
    ax.legend(fontsize=8)


def _rate_curves_figure(job: PlotJob, rows: list):
    curves = {}
    for r in rows:
        if r.snr_db is None or r.subset.startswith("corner"):
            continue
        curves.setdefault((r.subset, r.estimator), []).append(r)
    if not curves:
        raise ValueError(f"{job.input_csv}: no sweep rows to plot")

    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    multiple_estimators = len({est for _, est in curves}) > 1
    for i, ((subset, estimator), group) in enumerate(sorted(curves.items())):
        group.sort(key=lambda r: r.snr_db)
        x = [r.snr_db for r in group]
        y = [r.rate_bits for r in group]
        color = _COLORS[i % len(_COLORS)]
        label = f"{subset} [{estimator}]" if multiple_estimators else subset
        ax.plot(x, y, marker="o", markersize=3.5, lw=1.2, color=color, label=label)
        lo = [r.lower_bound_bits for r in group]
        hi = [r.upper_bound_bits for r in group]
        if all(v is not None for v in lo + hi):
            ax.fill_between(x, lo, hi, color=color, alpha=0.15, lw=0)
        if any(r.std_error_bits > 0 for r in group):
            ax.errorbar(x, y, yerr=[r.std_error_bits for r in group],
                        fmt="none", ecolor=color, elinewidth=0.8, capsize=2)
    _finish_axes(ax, job)
    return fig


def _pentagon(r1: float, r2: float, rsum: float) -> list:
    rsum = min(rsum, r1 + r2)
    return [(0.0, 0.0), (r1, 0.0), (r1, max(0.0, rsum - r1)),
            (max(0.0, rsum - r2), r2), (0.0, r2)]


def _region_figure(job: PlotJob, rows: list):
    series = {}
    for r in rows:
        key = (r.estimator, r.snr_db)
        series.setdefault(key, {})[r.subset] = r
    fig, ax = plt.subplots(figsize=(5.2, 5.0))
    drawn = 0
    for i, ((estimator, snr_db), by_subset) in enumerate(sorted(
            series.items(), key=lambda kv: (kv[0][0] != "awgn", kv[0]))):
        missing = [lab for lab in ("R1", "R2", "Rsum") if lab not in by_subset]
        if missing:
            raise ValueError(
                f"{job.input_csv}: region series {estimator!r} lacks "
                f"{'/'.join(missing)} rows")
        verts = _pentagon(by_subset["R1"].rate_bits, by_subset["R2"].rate_bits,
                          by_subset["Rsum"].rate_bits)
        color = _COLORS[i % len(_COLORS)]
        name = "AWGN" if estimator == "awgn" else f"MBM ({estimator})"
        if snr_db is not None and len({k[1] for k in series}) > 1:
            name += f" @ {snr_db:g} dB"
        ax.add_patch(Polygon(verts, closed=True, facecolor=color, alpha=0.12,
                             edgecolor=color, lw=1.5, label=name))
        corners = [(by_subset[f"corner{j}.R1"].rate_bits,
                    by_subset[f"corner{j}.R2"].rate_bits)
                   for j in (1, 2)
                   if f"corner{j}.R1" in by_subset and f"corner{j}.R2" in by_subset]
        if corners:
            ax.plot(*zip(*corners), "o", color=color, markersize=4)
        drawn += 1
    if drawn == 0:
        raise ValueError(f"{job.input_csv}: no region series found")
    ax.relim()
    ax.autoscale_view()
    ax.set_xlim(left=0.0)
    ax.set_ylim(bottom=0.0)
    job = job if job.xlabel else _with_region_labels(job)
    _finish_axes(ax, job)
    return fig


def _with_region_labels(job: PlotJob) -> PlotJob:
    from dataclasses import replace
    return replace(job, xlabel="R1 (bits/s/Hz)", ylabel=job.ylabel or "R2 (bits/s/Hz)")


def _atomic_save(fig, path: str, dpi: int) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    suffix = os.path.splitext(path)[1] or ".png"
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=suffix)
    os.close(fd)
    try:
        fig.savefig(tmp, dpi=dpi)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
