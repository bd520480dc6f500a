"""Following a circling leader from the outside or the inside.

The zonal controller lags on the outside track and cuts in on the inside
one, so the mean distance to the leader lands on opposite sides of the
target.  Prints both means over a range of seeds.

    python demos/circle_bias.py --seeds 10
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
        cfg = builtin(f"sec42_circle_{side}")
        runs = [compute_metrics(run(cfg, s), cfg)["follower"] for s in range(args.seeds)]
        mean_d = np.mean([r["mean_distance_to_leader"] for r in runs])
        target = runs[0]["target_distance"]
        print(f"{side:8s} mean distance {mean_d:6.1f} mm, target {target:6.1f} mm, offset {mean_d - target:+6.1f} mm")


if __name__ == "__main__":
    main()
