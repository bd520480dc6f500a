"""Four followers share two leaders circling in opposite directions.

Each follower attaches to whichever leader it estimates to be nearer.
Prints, per follower, the fraction of time spent with each leader and the
number of reassignments.

    python demos/two_leaders.py --seed 0
"""

import argparse

import numpy as np

from swarmsim.scenario import builtin, run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cfg = builtin("sec52_two_leaders")
    log = run(cfg, args.seed)
    names = {i: cfg.agents[i].id for i in cfg.leader_indices()}
    for i in cfg.follower_indices():
        sel = log.selected[:, i]
        seen = sel >= 0
        shares = ", ".join(f"{names[j]} {np.mean(sel[seen] == j):.2f}" for j in names)
        changes = int(np.sum(sel[seen][1:] != sel[seen][:-1]))
        print(f"{cfg.agents[i].id}: {shares}; {changes} reassignments")


if __name__ == "__main__":
    main()
