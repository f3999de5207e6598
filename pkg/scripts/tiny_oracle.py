"""How often each preset finds the exhaustive optimum on tiny instances."""

import argparse

from evcsl.instance_io import SyntheticSpec, generate_synthetic
from evcsl.model import brute_force_optimum
from evcsl.run import Budget
from evcsl.solvers import PRESETS, solve_preset


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--instances", type=int, default=50)
    ap.add_argument("--evals", type=int, default=20_000)
    ap.add_argument("--candidates", type=int, default=12)
    ap.add_argument("--clients", type=int, default=10)
    ap.add_argument("--stations", type=int, default=4)
    args = ap.parse_args()

    hits = dict.fromkeys(PRESETS, 0)
    for seed in range(args.instances):
        inst = generate_synthetic(SyntheticSpec(
            args.clients, args.candidates, 3, args.stations, side=5_000.0, capacity=(1, 3),
            max_substation_dist=3_000.0, seed=seed))
        _, opt = brute_force_optimum(inst)
        for preset in PRESETS:
            res = solve_preset(inst, preset, seed, Budget(evals=args.evals))
            hits[preset] += res.best.key == opt.key
    for preset, h in hits.items():
        print(f"{preset:<6} {h}/{args.instances}")


if __name__ == "__main__":
    main()
