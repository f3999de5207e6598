"""Command line interface: generate, import, evaluate, solve, bench, report.

Exit codes: 0 success, 1 error, 2 the resulting solution violates a
constraint. Data goes to stdout or files, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

from evcsl import bench, stats
from evcsl.instance_io import (SYNTHETIC_PRESETS, SyntheticSpec, generate_synthetic,
                               import_city, load_instance, load_solution, save_instance,
                               save_solution)
from evcsl.model import UNBOUNDED, InstanceError, SolutionError, evaluate
from evcsl.run import Budget
from evcsl.solvers import PRESETS, resolve, solve

log = logging.getLogger("evcsl")

OUTPUT_DIR_ENV = "EVCSL_OUTPUT_DIR"

SCHEMA_NOTE = """\
File formats (instance/solution JSON, city CSV headers, report and ECDF CSV)
are documented in docs/formats.md. Default output directory: $EVCSL_OUTPUT_DIR
(current directory when unset).
"""


def _out_path(arg, default_name):
    if arg:
        return Path(arg)
    return Path(os.environ.get(OUTPUT_DIR_ENV, ".")) / default_name


def _limit(text):
    if text is None or text == "unbounded":
        return UNBOUNDED
    return float(text)


def _budget(args) -> Budget:
    if args.seconds is None and args.evals is None:
        raise ValueError("give --seconds and/or --evals")
    return Budget(seconds=args.seconds, evals=args.evals)


def _overrides(args):
    if not args.config:
        return None
    text = args.config
    if not text.lstrip().startswith("{"):
        text = Path(text).read_text()
    overrides = json.loads(text)
    if not isinstance(overrides, dict):
        raise ValueError("--config must be a JSON object")
    return overrides


def _config(args):
    return resolve(args.preset, args.algo, _overrides(args))


def _instance(args):
    inst = load_instance(args.instance)
    if getattr(args, "stations", None) is not None and not isinstance(args.stations, list):
        inst = inst.with_stations(args.stations)
    return inst


def _eval_report(ev) -> dict:
    return {
        "objective": ev.objective,
        "avg_distance": ev.avg_distance,
        "dc_violations": ev.dc_violations,
        "substation_feasible": ev.substation_feasible,
        "violations": ev.violations,
        "open": ev.open.tolist(),
        "substation_assignment": ev.substation_assignment.tolist(),
    }


def _json_safe(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    return x


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_generate(args):
    if args.preset:
        spec = SYNTHETIC_PRESETS[args.preset]
        changes = {k: v for k, v in (("seed", args.seed), ("n_stations", args.stations))
                   if v is not None}
        if changes:
            spec = SyntheticSpec(**{**spec.__dict__, **changes})
    else:
        missing = [f for f in ("clients", "candidates", "substations", "stations")
                   if getattr(args, f) is None]
        if missing:
            raise ValueError("without --preset, give " + ", ".join(f"--{m}" for m in missing))
        spec = SyntheticSpec(
            n_clients=args.clients, n_candidates=args.candidates,
            n_substations=args.substations, n_stations=args.stations,
            geometry=args.geometry, side=args.side, n_hotspots=args.hotspots,
            hotspot_stddev=args.hotspot_sd, population=tuple(args.population),
            capacity=tuple(args.capacity), max_client_dist=_limit(args.dc_max),
            max_substation_dist=_limit(args.de_max), seed=args.seed or 0, name=args.name)
    inst = generate_synthetic(spec)
    out = _out_path(args.out, f"{inst.name}.json")
    save_instance(inst, out, matrices=args.matrices)
    log.info("wrote %s (N=%d, M=%d, T=%d, Ms=%d)", out, inst.n_clients, inst.n_candidates,
             inst.n_substations, inst.n_stations)
    return 0


def cmd_import(args):
    inst = import_city(args.clients_csv, args.candidates_csv, args.substations_csv,
                       args.stations, _limit(args.dc_max), _limit(args.de_max), args.name)
    out = _out_path(args.out, f"{inst.name}.json")
    save_instance(inst, out)
    log.info("wrote %s (N=%d, M=%d, T=%d)", out, inst.n_clients, inst.n_candidates,
             inst.n_substations)
    return 0


def cmd_evaluate(args):
    inst = _instance(args)
    sol = load_solution(args.solution, inst)
    ev = evaluate(inst, sol)
    print(json.dumps(_eval_report(ev)))
    return 0 if ev.feasible else 2


def cmd_solve(args):
    inst = _instance(args)
    label, config = _config(args)
    result = solve(inst, config, args.seed, _budget(args), label)
    out = _out_path(args.out, "solution.json")
    save_solution(result.solution, out)
    if args.trajectory:
        with open(args.trajectory, "w") as fh:
            fh.write("evals,violations,avg_distance_m\n")
            for e, v, o in result.trajectory:
                fh.write(f"{int(e)},{int(v)},{o!r}\n")
    summary = result.summary()
    summary["solution"] = str(out)
    print(json.dumps(summary))
    return 0 if result.best.feasible else 2


def cmd_bench(args):
    base = load_instance(args.instance)
    budget = _budget(args)
    labels = args.preset or [None]
    stations = args.stations or [None]
    overrides = _overrides(args)
    records = []
    for ms in stations:
        inst = base if ms is None else base.with_stations(ms)
        iid = args.instance_id or inst.name
        if ms is not None:
            iid = f"{iid}-Ms{ms}"
        for preset in labels:
            label, config = resolve(preset, args.algo, overrides)
            log.info("%s: %s x %d runs", iid, label, args.runs)
            rep = bench.run_batch(inst, config, args.runs, args.base_seed, budget,
                                  args.parallel, iid)
            records.extend(bench.RunRecord(r.instance, r.algorithm, label, r.seed,
                                           r.best_avg_distance_m, r.evals, r.wall_s)
                           for r in rep.records)
    if args.out:
        bench.write_report_csv(records, args.out)
    else:
        bench.write_report_csv(records, fh=sys.stdout)
    return 0


def cmd_report(args):
    records = bench.read_report_csv(args.reports)
    if not records:
        raise ValueError("no runs in the given reports")
    scale = args.scale
    table = bench.summary_table(records, scale)
    tests = bench.pairwise_wilcoxon(records)
    out = {"summary": table, "wilcoxon": tests}

    baseline = args.baseline_value
    if args.baseline_solution:
        if not args.instance:
            raise ValueError("--baseline-solution needs --instance")
        inst = load_instance(args.instance)
        sol = load_solution(args.baseline_solution)
        if len(sol) != inst.n_stations:
            inst = inst.with_stations(len(sol))
        baseline = evaluate(inst, sol.validate(inst)).avg_distance
    if baseline is not None:
        out["baseline_avg_distance"] = baseline
        ecdf_dir = _out_path(args.ecdf_dir, "")
        ecdf_dir.mkdir(parents=True, exist_ok=True)
        files = []
        for (inst_id, preset), recs in bench.group_records(records).items():
            pts = stats.improvement_ecdf([r.best_avg_distance_m for r in recs], baseline)
            path = ecdf_dir / f"ecdf_{inst_id}_{preset}.csv"
            bench.write_ecdf_csv(pts, path)
            files.append(str(path))
        out["ecdf_files"] = files

    if args.json:
        print(json.dumps(_json_safe(out), allow_nan=False))
        return 0
    unit = " (x10^2)" if scale == 0.01 else ""
    print(f"{'instance':<24}{'preset':<10}{'Mean±SD' + unit:<22}{'Min':>10}{'Median':>10}{'Max':>10}")
    for row in table:
        print(f"{row['instance']:<24}{row['preset']:<10}{row['mean_sd']:<22}"
              f"{row['min']:>10}{row['median']:>10}{row['max']:>10}")
    if tests:
        print()
        print(f"{'instance':<24}{'a':<10}{'b':<10}{'W':>8}{'p':>12}{'p_bonf':>12}  better")
        for t in tests:
            print(f"{t['instance']:<24}{t['a']:<10}{t['b']:<10}{t['statistic']:>8.1f}"
                  f"{t['p']:>12.3g}{t['p_adj']:>12.3g}  {t['better']}")
    if baseline is not None:
        print(f"\nbaseline avg distance: {baseline:.2f} m; ECDF files: {', '.join(out['ecdf_files'])}")
    return 0


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def _add_budget(p):
    p.add_argument("--seconds", type=float, help="wall-clock budget per run")
    p.add_argument("--evals", type=int, help="evaluation budget per run")


def _add_algo(p, multi=False):
    p.add_argument("--algo", choices=["ga", "vns"])
    if multi:
        p.add_argument("--preset", action="append", choices=sorted(PRESETS),
                       help="repeatable")
    else:
        p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--config", help="JSON object (or file) overriding config fields")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evcsl", description="Charging-station location solver and benchmark tools.",
        epilog=SCHEMA_NOTE, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic instance", epilog=SCHEMA_NOTE)
    p.add_argument("--preset", choices=sorted(SYNTHETIC_PRESETS))
    p.add_argument("--clients", type=int)
    p.add_argument("--candidates", type=int)
    p.add_argument("--substations", type=int)
    p.add_argument("--stations", type=int)
    p.add_argument("--geometry", choices=["uniform", "clustered"], default="uniform")
    p.add_argument("--side", type=float, default=10_000.0)
    p.add_argument("--hotspots", type=int, default=8)
    p.add_argument("--hotspot-sd", type=float, default=1_000.0)
    p.add_argument("--population", type=float, nargs=2, default=(100, 3000))
    p.add_argument("--capacity", type=int, nargs=2, default=(2, 6))
    p.add_argument("--dc-max", default="unbounded")
    p.add_argument("--de-max", default="unbounded")
    p.add_argument("--seed", type=int)
    p.add_argument("--name")
    p.add_argument("--matrices", action="store_true", help="write dc/de instead of coordinates")
    p.add_argument("--out")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("import", help="build an instance from city CSVs", epilog=SCHEMA_NOTE)
    p.add_argument("--clients-csv", required=True)
    p.add_argument("--candidates-csv", required=True)
    p.add_argument("--substations-csv", required=True)
    p.add_argument("--stations", type=int, required=True)
    p.add_argument("--dc-max", default="unbounded")
    p.add_argument("--de-max", default="unbounded")
    p.add_argument("--name", default="city")
    p.add_argument("--out")
    p.set_defaults(func=cmd_import)

    p = sub.add_parser("evaluate", help="score a solution file", epilog=SCHEMA_NOTE)
    p.add_argument("--instance", required=True)
    p.add_argument("--solution", required=True)
    p.add_argument("--stations", type=int, help="override the instance station count")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("solve", help="run one solver", epilog=SCHEMA_NOTE)
    p.add_argument("--instance", required=True)
    _add_algo(p)
    p.add_argument("--seed", type=int, default=0)
    _add_budget(p)
    p.add_argument("--stations", type=int, help="override the instance station count")
    p.add_argument("--out", help="solution file (default $EVCSL_OUTPUT_DIR/solution.json)")
    p.add_argument("--trajectory", help="optional CSV of best-so-far per iteration")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="seeded batches of runs to a report CSV",
                       epilog=SCHEMA_NOTE)
    p.add_argument("--instance", required=True)
    _add_algo(p, multi=True)
    p.add_argument("--runs", type=int, default=30)
    p.add_argument("--base-seed", type=int, default=0)
    _add_budget(p)
    p.add_argument("--stations", type=int, nargs="+", help="sweep these station counts")
    p.add_argument("--parallel", type=int, default=1)
    p.add_argument("--instance-id")
    p.add_argument("--out", help="report CSV (default stdout)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("report", help="summaries, Wilcoxon tests and ECDFs from report CSVs",
                       epilog=SCHEMA_NOTE)
    p.add_argument("reports", nargs="+")
    p.add_argument("--scale", type=float, default=1.0, help="0.01 for tables in units of 10^2")
    p.add_argument("--baseline-value", type=float)
    p.add_argument("--baseline-solution")
    p.add_argument("--instance")
    p.add_argument("--ecdf-dir")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (InstanceError, SolutionError, ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
