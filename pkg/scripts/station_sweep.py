"""Mean best distance against station count on a clustered synthetic city.

Runs every preset at each station count and writes one report CSV. With the
defaults this is the 1000-candidate, 100-client sweep used by the acceptance
suite (about 7 minutes on one core).

    python scripts/station_sweep.py --out sweep.csv
    evcsl report sweep.csv --scale 0.01
"""

import argparse
import time

import numpy as np

from evcsl import bench
from evcsl.instance_io import SyntheticSpec, generate_synthetic
from evcsl.run import Budget
from evcsl.solvers import PRESETS


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--stations", type=int, nargs="+", default=[10, 20, 30, 40, 50])
    ap.add_argument("--presets", nargs="+", default=sorted(PRESETS), choices=sorted(PRESETS))
    ap.add_argument("--runs", type=int, default=30)
    ap.add_argument("--evals", type=int, default=200_000)
    ap.add_argument("--clients", type=int, default=100)
    ap.add_argument("--candidates", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=2024, help="instance seed")
    ap.add_argument("--parallel", type=int, default=1)
    ap.add_argument("--out", default="sweep.csv")
    args = ap.parse_args()

    spec = SyntheticSpec(args.clients, args.candidates, 8, max(args.stations),
                         geometry="clustered", side=10_000.0, capacity=(8, 12),
                         max_substation_dist=5_000.0, seed=args.seed, name="sweep")
    base = generate_synthetic(spec)
    records = []
    t0 = time.perf_counter()
    for ms in args.stations:
        inst = base.with_stations(ms)
        for preset in args.presets:
            rep = bench.run_batch(inst, preset, args.runs, 0, Budget(evals=args.evals),
                                  args.parallel, instance_id=f"sweep-Ms{ms}")
            records.extend(rep.records)
            print(f"Ms={ms:<3} {preset:<6} mean {np.mean(rep.values):9.2f} m  "
                  f"best {min(rep.values):9.2f} m  [{time.perf_counter() - t0:6.0f}s]",
                  flush=True)
    bench.write_report_csv(records, args.out)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
