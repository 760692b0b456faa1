"""
Reproduce every bundled figure: run the CLI commands for each scenario and
render the resulting CSVs.

Usage:
    python -m pss_model.scripts.run_figures [out_dir]

Output (in out_dir):
    - <scenario>_*.csv   traces, spectra, coefficients, modes and Bode tables
    - <scenario>_*.png   figures rendered by plots.render_all
    - <scenario>_validation.csv for the scenarios with a validation step
"""

import sys

from pss_model.cli import run_command
from pss_model.scripts.plots import render_all

OUT_DIR = "outputs"

FIGURE_COMMANDS = {
    "fig3_bode": ("bode",),
    "fig4a_speed": ("simulate", "linear", "validate"),
    "fig4b_power": ("linear", "validate"),
    "fig5a_speed": ("simulate", "nonlinear", "validate"),
    "fig5b_power": ("nonlinear", "validate"),
    "fig6_inertia_sweep": ("nonlinear",),
    "fig7_envelope": ("envelope", "validate"),
}


def main(out_dir=OUT_DIR, names=None):
    """Run the figure scenarios; returns the number of failed commands."""
    names = list(FIGURE_COMMANDS) if names is None else list(names)
    failures = 0

    print("=" * 70)
    print("✅ PSS1A/AVR FIGURE RUNS")
    print("=" * 70)
    for step, name in enumerate(names, start=1):
        print(f"\nSTEP {step}: {name}")
        for command in FIGURE_COMMANDS[name]:
            code = run_command([command, "--scenario", name, "--out-dir", out_dir])
            mark = "✓" if code == 0 else "✗"
            print(f"  {mark} {command} (exit {code})")
            failures += code != 0

    pngs = render_all(out_dir)
    print(f"\n✅ {len(pngs)} figure(s) saved in: {out_dir}")
    if failures:
        print(f"⚠️  {failures} command(s) failed; see the log above")
    print("=" * 70)
    return failures


if __name__ == "__main__":
    sys.exit(1 if main(sys.argv[1] if len(sys.argv) > 1 else OUT_DIR) else 0)
