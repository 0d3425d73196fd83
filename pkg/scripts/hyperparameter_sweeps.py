"""Interior points, boundary points, depth and width sweeps over seeds.

    python scripts/hyperparameter_sweeps.py --problem A --timeout 15 --seeds 0-9 --out runs/sweeps

Writes one ``sweep.csv``/``sweep_summary.csv`` pair per axis under ``<out>/<axis>``.
"""

import argparse
import dataclasses
from pathlib import Path

from mamlp.cli import RunConfig, run_sweep, summarize_sweep

AXES = {
    "n_interior": [100, 400, 900, 1600, 2500, 3600],
    "n_boundary": [8, 16, 64, 128, 500],
    "depth": [1, 2, 3, 4],
    "width": [4, 8, 16, 32, 64],
}


def parse_seeds(text):
    if "-" in text:
        lo, hi = (int(v) for v in text.split("-"))
        return tuple(range(lo, hi + 1))
    return tuple(int(v) for v in text.split(","))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--problem", default="A")
    ap.add_argument("--axes", default=",".join(AXES))
    ap.add_argument("--timeout", type=float, default=15.0)
    ap.add_argument("--seeds", default="0-9")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="runs/sweeps")
    args = ap.parse_args()
    cfg = dataclasses.replace(RunConfig(), problem=args.problem.upper(), timeout_s=args.timeout,
                              seeds=parse_seeds(args.seeds), record_nmae=False)
    for axis in args.axes.split(","):
        rows = run_sweep(cfg, axis, AXES[axis], Path(args.out) / axis, args.jobs)
        for s in summarize_sweep(rows):
            print(f"{axis}={s['axis_value']:<6} median {s['median']:.3e}  "
                  f"ci95 [{s['ci_low']:.3e}, {s['ci_high']:.3e}]  time {s['mean_wall_time_s']:.1f}s", flush=True)


if __name__ == "__main__":
    main()
