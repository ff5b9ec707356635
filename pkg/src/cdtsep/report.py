"""Figure rendering for experiment reports.

Renders the aggregated metric curves and spectrogram panels to PNG files
next to the delimited output.  Uses the Agg backend so reports work in
headless runs.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .audio_io import AudioBuffer
from .metrics import spectrogram

_METRIC_COLORS = {"sdr_db": "tab:red", "sir_db": "tab:green", "sar_db": "tab:blue"}
_SOURCE_STYLES = {"a": "-", "b": "--"}


def plot_metrics_vs_n(rows: list[dict], path) -> None:
    """Plot SDR/SIR/SAR against the pass count N, one curve per metric/source.

    ``rows`` are dicts with keys n, source, sdr_db, sir_db, sar_db (the
    experiment CSV rows).  Source "a" is drawn solid, "b" dashed.
    """
    fig, ax = plt.subplots(figsize=(7, 4.5))
    n_values = sorted({int(r["n"]) for r in rows})
    for source, style in _SOURCE_STYLES.items():
        source_rows = {int(r["n"]): r for r in rows if r["source"] == source}
        if not source_rows:
            continue
        for metric, color in _METRIC_COLORS.items():
            y = [float(source_rows[n][metric]) for n in n_values if n in source_rows]
            label = f"{metric[:3].upper()} ({source})"
            ax.plot(n_values, y, style, color=color, marker="o", label=label)
    ax.set_xscale("log", base=2)
    ax.set_xticks(n_values)
    ax.set_xticklabels([str(n) for n in n_values])
    ax.set_xlabel("re-synthesis passes N")
    ax.set_ylabel("dB")
    ax.grid(True, alpha=0.3)
    ax.legend(ncol=2, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_spectrogram_panels(signals: list[tuple[str, AudioBuffer]], path,
                            fft_size: int = 256, hop: int = 32,
                            floor_db: float = -80.0) -> None:
    """Stack spectrogram panels (time horizontal, frequency vertical)."""
    fig, axes = plt.subplots(len(signals), 1,
                             figsize=(7, 1.9 * len(signals)), sharex=True)
    if len(signals) == 1:
        axes = [axes]
    for ax, (name, buf) in zip(axes, signals):
        spec = spectrogram(buf.mono(), fft_size, hop)
        extent = (0.0, buf.num_samples / buf.sample_rate,
                  0.0, buf.sample_rate / 2.0 / 1000.0)
        ax.imshow(spec.T, origin="lower", aspect="auto", extent=extent,
                  vmin=floor_db, vmax=spec.max(), cmap="magma")
        ax.set_ylabel("kHz")
        ax.set_title(name, fontsize=9, loc="left")
    axes[-1].set_xlabel("time [s]")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
