"""Zonal speed law against the smooth tanh law on paired seeds.

Both variants see identical initial conditions for a given seed, so the
comparison is paired.  Prints the median steady RMS error and the mean
absolute distance offset for each side and variant.

    python demos/zonal_vs_tanh.py --seeds 10
"""

import argparse

import numpy as np

from swarmsim.scenario import builtin, run
from swarmsim.scenario.metrics import compute_metrics


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=10, help="number of seeds, starting at 0")
    args = ap.parse_args()

    for side in ("outside", "inside"):
        base = builtin(f"sec51_zonal_vs_tanh_{side}")
        for variant in ("zonal", "tanh"):
            cfg = base.with_variant(variant)
            runs = [compute_metrics(run(cfg, s), cfg)["follower"] for s in range(args.seeds)]
            rms = np.median([r["steady_rms_error"] for r in runs])
            off = np.mean([r["mean_abs_distance_offset"] for r in runs])
            print(f"{side:8s} {variant:5s} median rms {rms:6.1f} mm, mean |d - target| {off:6.1f} mm")


if __name__ == "__main__":
    main()
