"""A follower finds a straight-swimming leader and settles on its left flank.

Runs one seed of ``sec41_straight``, prints the follower's metrics and writes
top-view, distance and depth plots.

    python demos/straight_line.py --seed 3 --out demo_out/straight
"""

import argparse
import os

from swarmsim.plotting import render
from swarmsim.scenario import builtin, run
from swarmsim.scenario.io import dumps_json, metrics_document
from swarmsim.scenario.metrics import compute_metrics


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="demo_out/straight")
    args = ap.parse_args()

    cfg = builtin("sec41_straight")
    log = run(cfg, args.seed)
    metrics = compute_metrics(log, cfg)
    print(dumps_json(metrics_document(metrics)), end="")

    # the approach zone ends once the estimated distance drops below the threshold
    zone = log.zone[:, 1]
    first_follow = next((log.t[k] for k in range(log.n_ticks) if zone[k] == 1), None)
    print(f"first tick in the follow zone: {first_follow} s")

    os.makedirs(args.out, exist_ok=True)
    for kind in ("topview", "distance", "depth"):
        path = os.path.join(args.out, f"plot_{kind}.svg")
        with open(path, "w") as fh:
            fh.write(render([log], cfg, kind))
        print("wrote", path)


if __name__ == "__main__":
    main()
