"""
Render the CSV outputs of the CLI as PNG figures.

Usage:
    python -m pss_model.scripts.plots [out_dir]

Every ``*_traces.csv`` becomes a time plot, every ``*_spectra.csv`` a
spectrum plot and every ``*_bode_pss.csv`` / ``_avr`` / ``_cascade`` triple
one magnitude and phase figure. PNGs are written next to the CSVs.
"""

import os
import sys
from glob import glob

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

DPI = 200
BODE_PARTS = ("pss", "avr", "cascade")


def _png_path(csv_path):
    return os.path.splitext(csv_path)[0] + ".png"


def plot_traces(csv_path, title=None):
    df = pd.read_csv(csv_path)
    plt.figure(figsize=(8, 4.5))
    for column in df.columns:
        if column != "t":
            plt.plot(df["t"], df[column], label=column, linewidth=1)
    plt.title(title or os.path.basename(csv_path))
    plt.xlabel("t [s]")
    plt.ylabel("signal")
    plt.legend()
    plt.grid(alpha=0.3)
    plt.tight_layout()
    out = _png_path(csv_path)
    plt.savefig(out, dpi=DPI)
    plt.close()
    return out


def plot_spectra(csv_path, title=None):
    df = pd.read_csv(csv_path)
    plt.figure(figsize=(8, 4.5))
    for column in df.columns:
        if column.endswith("_spectrum"):
            plt.plot(df["omega"], df[column], label=column, linewidth=1)
    plt.title(title or os.path.basename(csv_path))
    plt.xlabel("omega [rad/s]")
    plt.ylabel("spectrum")
    plt.legend()
    plt.grid(alpha=0.3)
    plt.tight_layout()
    out = _png_path(csv_path)
    plt.savefig(out, dpi=DPI)
    plt.close()
    return out


def plot_bode(out_dir, name):
    fig, (ax_mag, ax_phase) = plt.subplots(2, 1, sharex=True, figsize=(8, 6))
    for part in BODE_PARTS:
        df = pd.read_csv(os.path.join(out_dir, f"{name}_bode_{part}.csv"))
        ax_mag.semilogx(df["omega"], df["mag_db"], label=part)
        ax_phase.semilogx(df["omega"], df["phase_deg"], label=part)
    ax_mag.set_ylabel("magnitude [dB]")
    ax_phase.set_ylabel("phase [deg]")
    ax_phase.set_xlabel("omega [rad/s]")
    ax_mag.set_title(f"{name}: PSS1A, AVR and cascade")
    for ax in (ax_mag, ax_phase):
        ax.grid(alpha=0.3, which="both")
        ax.legend()
    fig.tight_layout()
    out = os.path.join(out_dir, f"{name}_bode.png")
    fig.savefig(out, dpi=DPI)
    plt.close(fig)
    return out


def render_all(out_dir):
    """Plot every recognised CSV in ``out_dir``; returns the PNG paths."""
    written = []
    for csv_path in sorted(glob(os.path.join(out_dir, "*.csv"))):
        base = os.path.basename(csv_path)
        if base.endswith("_traces.csv"):
            written.append(plot_traces(csv_path))
        elif base.endswith("_spectra.csv"):
            written.append(plot_spectra(csv_path))
        elif base.endswith("_rotor.csv") or base.endswith("_two_body.csv"):
            written.append(plot_traces(csv_path))
        elif base.endswith("_bode_pss.csv"):
            written.append(plot_bode(out_dir, base[: -len("_bode_pss.csv")]))
    return written


if __name__ == "__main__":
    target = sys.argv[1] if len(sys.argv) > 1 else "outputs"
    pngs = render_all(target)
    print(f"✅ {len(pngs)} figure(s) saved in: {target}")
