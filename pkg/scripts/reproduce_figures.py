#!/usr/bin/env python3
"""Reproduce the two-qubit sweeps and render them when figrender is installed.

Writes fig3.csv, fig4.csv, fig5.csv (and .png plots) into --outdir.
Full-resolution grids take ~30 s; pass --steps to coarsen the 2D grids.
"""

import argparse
import json
from pathlib import Path

from nasep.configio import SweepConfig
from nasep.experiments import default_sweep_config, run_sweep


def _grid_config(figure: int, steps: int | None) -> SweepConfig:
    defaults = default_sweep_config(figure)
    if steps is None or figure == 3:
        return defaults
    overrides = {
        "axis1": {"path": defaults.axis1.path, "min": defaults.axis1.lo,
                  "max": defaults.axis1.hi, "steps": steps},
        "axis2": {"path": defaults.axis2.path, "min": defaults.axis2.lo,
                  "max": defaults.axis2.hi, "steps": steps},
    }
    return SweepConfig.from_dict(overrides, defaults)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--outdir", default="out")
    parser.add_argument("--steps", type=int, default=None,
                        help="grid resolution for figures 4 and 5 (default 41)")
    parser.add_argument("--no-render", action="store_true")
    args = parser.parse_args()

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    csvs = {}
    for figure in (3, 4, 5):
        out = outdir / f"fig{figure}.csv"
        rows = run_sweep(figure, out, _grid_config(figure, args.steps))
        csvs[figure] = out
        print(f"fig{figure}: {rows} rows -> {out}")

    if args.no_render:
        return 0
    try:
        from figrender import PlotSpec, render
    except ImportError:
        print("figrender not installed; skipping plots")
        return 0
    render(PlotSpec(
        csv_path=str(csvs[3]), kind="lines", out_path=str(outdir / "fig3.png"),
        columns=("theta", "ekappa_re", "ekappa_im", "correction_re", "correction_im"),
        title="charge-SEP fluctuation-theorem terms", xlabel="theta",
    ))
    render(PlotSpec(
        csv_path=str(csvs[4]), kind="heatmap", out_path=str(outdir / "fig4.png"),
        columns=("beta_x_A", "beta_z_A", "sigma_surp_avg_traj"),
        title="average surprisal SEP",
    ))
    render(PlotSpec(
        csv_path=str(csvs[5]), kind="heatmap", out_path=str(outdir / "fig5.png"),
        columns=("beta_x_A", "beta_y_A", "sigma_traj_im"),
        title="Im sigma_traj on the |01> -> |00> trajectory",
    ))
    print(f"plots written to {outdir}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
