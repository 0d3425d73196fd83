"""Monte-Carlo noise floor of the ray-traced image NMAE.

Ray-traces the identity map on the unit disk, whose image should be exactly
the uniform disk, and reports the image NMAE against the supersampled target
for increasing ray counts. This floor is what any learned map is measured
against at a given ray count and bin grid.

    python scripts/noise_floor.py --bins 100 --rays 1e4,1e5,1e6
"""

import argparse

import numpy as np

from mamlp import evaluate as ev
from mamlp.problems import ProblemSpec
from mamlp.sampling import Disk


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--bins", type=int, default=100)
    ap.add_argument("--rays", default="1e4,1e5,1e6")
    args = ap.parse_args()
    bins = (args.bins, args.bins)
    uniform = ProblemSpec("uniform", Disk(), Disk(), lambda x: np.ones(len(x)), lambda a, b: np.ones_like(a))
    target = ev.target_image(uniform, bins, ev.CIRCLE_EXTENT)
    for n in (int(float(v)) for v in args.rays.split(",")):
        traced = ev.ray_trace(lambda x: x, Disk(), n_rays=n, bins=bins)
        print(f"{n:>11d} rays  {args.bins}x{args.bins} bins  image NMAE {ev.image_nmae(traced, target):.3e}",
              flush=True)


if __name__ == "__main__":
    main()
