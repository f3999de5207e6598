"""Timed solves on the generated large city (363 clients, 33,550 candidates).

    python scripts/large_instance.py --seconds 60 --runs 1 --out large.csv
"""

import argparse
import resource

from evcsl import bench
from evcsl.instance_io import MALAGA_LIKE, SyntheticSpec, generate_synthetic
from evcsl.run import Budget
from evcsl.solvers import PRESETS


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seconds", type=float, default=60.0)
    ap.add_argument("--runs", type=int, default=1)
    ap.add_argument("--stations", type=int, default=MALAGA_LIKE.n_stations)
    ap.add_argument("--presets", nargs="+", default=sorted(PRESETS), choices=sorted(PRESETS))
    ap.add_argument("--out", default="large.csv")
    args = ap.parse_args()

    spec = SyntheticSpec(**{**MALAGA_LIKE.__dict__, "n_stations": args.stations})
    inst = generate_synthetic(spec)
    records = []
    for preset in args.presets:
        rep = bench.run_batch(inst, preset, args.runs, 0, Budget(seconds=args.seconds))
        records.extend(rep.records)
        for r in rep.records:
            print(f"{preset:<6} seed {r.seed}: {r.best_avg_distance_m:.2f} m, "
                  f"{r.evals} evals, {r.wall_s:.1f}s", flush=True)
    peak = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024 ** 2
    print(f"peak RSS {peak:.2f} GB")
    bench.write_report_csv(records, args.out)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
