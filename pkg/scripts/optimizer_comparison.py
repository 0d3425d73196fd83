"""L-BFGS against Adam on problem A with matched budgets and seeds.

    python scripts/optimizer_comparison.py --timeout 15 --seeds 10 --out runs/optimizers

Per-iteration loss and NMAE curves go to ``<out>/<optimizer>/run_seed*.csv``.
"""

import argparse
import dataclasses
from pathlib import Path

from mamlp.cli import RunConfig, solve_one


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--problem", default="A")
    ap.add_argument("--timeout", type=float, default=15.0)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--lr", type=float, default=1e-3)
    ap.add_argument("--out", default="runs/optimizers")
    args = ap.parse_args()
    base = dataclasses.replace(RunConfig(), problem=args.problem.upper(), timeout_s=args.timeout, lr=args.lr)
    wins = 0
    for seed in range(args.seeds):
        res = {opt: solve_one(dataclasses.replace(base, optimizer=opt), seed, Path(args.out) / opt)
               for opt in ("lbfgs", "adam")}
        ratio = res["adam"].final_nmae / res["lbfgs"].final_nmae
        wins += ratio >= 10
        print(f"seed {seed}: L-BFGS {res['lbfgs'].final_nmae:.3e}  Adam {res['adam'].final_nmae:.3e}  "
              f"ratio {ratio:.1f}", flush=True)
    print(f"L-BFGS at least 10x better in {wins}/{args.seeds} seeds")


if __name__ == "__main__":
    main()
