"""Batches of seeded runs, report CSVs and the derived comparison tables.

Report CSV, one row per run::

    instance,algorithm,preset,seed,best_avg_distance_m,evals,wall_s

ECDF CSV::

    improvement_pct,cum_fraction
"""

from __future__ import annotations

import csv
import itertools
from collections import OrderedDict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from evcsl import stats
from evcsl.model import Instance
from evcsl.run import Budget, RunResult
from evcsl.solvers import AlgoConfig, algorithm_of, resolve, solve

REPORT_HEADER = ["instance", "algorithm", "preset", "seed", "best_avg_distance_m", "evals",
                 "wall_s"]
ECDF_HEADER = ["improvement_pct", "cum_fraction"]


@dataclass(frozen=True)
class RunRecord:
    instance: str
    algorithm: str
    preset: str
    seed: int
    best_avg_distance_m: float
    evals: int
    wall_s: float

    def csv_row(self) -> list[str]:
        return [self.instance, self.algorithm, self.preset, str(self.seed),
                repr(float(self.best_avg_distance_m)), str(self.evals), f"{self.wall_s:.3f}"]


@dataclass
class BenchReport:
    instance: str
    algorithm: str
    preset: str
    records: list
    baseline: Optional[float] = None
    results: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if not self.records:
            raise ValueError("a report needs at least one run")
        seeds = [r.seed for r in self.records]
        if len(set(seeds)) != len(seeds):
            raise ValueError("seeds within a report must be distinct")

    @property
    def values(self) -> list[float]:
        return [r.best_avg_distance_m for r in self.records]

    def summary(self, scale: float = 1.0) -> stats.Summary:
        return stats.summarize(self.values, scale)

    def ecdf(self, baseline: Optional[float] = None):
        baseline = self.baseline if baseline is None else baseline
        if baseline is None:
            raise ValueError("no baseline given")
        return stats.improvement_ecdf(self.values, baseline)


def record_of(result: RunResult, instance_id: str) -> RunRecord:
    return RunRecord(instance_id, result.algorithm, result.preset, result.seed,
                     result.best.avg_distance, result.evals, result.elapsed)


_WORKER_INSTANCE: Optional[Instance] = None


def _init_worker(instance: Instance):
    global _WORKER_INSTANCE
    _WORKER_INSTANCE = instance


def _work(task):
    config, seed, budget, label = task
    return solve(_WORKER_INSTANCE, config, seed, budget, label)


def run_batch(instance: Instance, algo: Union[str, AlgoConfig], n_runs: int, base_seed: int,
              budget: Budget, parallelism: int = 1, instance_id: Optional[str] = None,
              baseline: Optional[float] = None, keep_results: bool = False) -> BenchReport:
    """``n_runs`` independent runs with seeds base_seed, base_seed + 1, ...

    ``algo`` is a preset name or a config object. Runs may execute in
    ``parallelism`` worker processes; records always come back in seed order.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    if isinstance(algo, str):
        label, config = resolve(algo)
    else:
        label, config = "custom", algo
    instance_id = instance_id or instance.name
    tasks = [(config, base_seed + t, budget, label) for t in range(n_runs)]
    if parallelism <= 1:
        results = [solve(instance, *task[:3], task[3]) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=parallelism, initializer=_init_worker,
                                 initargs=(instance,)) as pool:
            results = list(pool.map(_work, tasks))
    records = [record_of(r, instance_id) for r in results]
    return BenchReport(instance_id, algorithm_of(config), label, records, baseline,
                       results if keep_results else [])


# --------------------------------------------------------------------------
# CSV
# --------------------------------------------------------------------------


def write_report_csv(records: Iterable[RunRecord], path: Union[str, Path, None] = None,
                     fh=None):
    own = fh is None
    if own:
        fh = open(path, "w", newline="")
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        for r in records:
            w.writerow(r.csv_row())
    finally:
        if own:
            fh.close()


def read_report_csv(paths: Union[str, Path, Sequence[Union[str, Path]]]) -> list[RunRecord]:
    if isinstance(paths, (str, Path)):
        paths = [paths]
    out = []
    for path in paths:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != REPORT_HEADER:
                raise ValueError(f"{path}: header must be {','.join(REPORT_HEADER)}")
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(REPORT_HEADER):
                    raise ValueError(f"{path}:{lineno}: expected {len(REPORT_HEADER)} fields")
                try:
                    out.append(RunRecord(row[0], row[1], row[2], int(row[3]), float(row[4]),
                                         int(row[5]), float(row[6])))
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: {exc}") from None
    return out


def write_ecdf_csv(points, path: Union[str, Path, None] = None, fh=None):
    own = fh is None
    if own:
        fh = open(path, "w", newline="")
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ECDF_HEADER)
        for x, f in points:
            w.writerow([repr(x), repr(f)])
    finally:
        if own:
            fh.close()


# --------------------------------------------------------------------------
# tables
# --------------------------------------------------------------------------


def group_records(records: Iterable[RunRecord]) -> "OrderedDict[tuple, list]":
    """(instance, preset) -> records sorted by seed, in first-seen order."""
    groups: OrderedDict = OrderedDict()
    for r in records:
        groups.setdefault((r.instance, r.preset), []).append(r)
    for key in groups:
        groups[key].sort(key=lambda r: r.seed)
    return groups


def summary_table(records: Iterable[RunRecord], scale: float = 1.0) -> list[dict]:
    rows = []
    for (inst, preset), recs in group_records(records).items():
        s = stats.summarize([r.best_avg_distance_m for r in recs], scale)
        rows.append({"instance": inst, "preset": preset, "n": s.n, **s.row(),
                     "mean": s.mean, "sd": s.sd})
    return rows


def pairwise_wilcoxon(records: Iterable[RunRecord]) -> list[dict]:
    """All preset pairs per instance, paired by seed rank, Bonferroni over the
    pairs of that instance."""
    by_instance: OrderedDict = OrderedDict()
    for (inst, preset), recs in group_records(records).items():
        by_instance.setdefault(inst, OrderedDict())[preset] = recs
    rows = []
    for inst, presets in by_instance.items():
        pairs = list(itertools.combinations(presets, 2))
        tests = []
        for a, b in pairs:
            va = [r.best_avg_distance_m for r in presets[a]]
            vb = [r.best_avg_distance_m for r in presets[b]]
            if len(va) != len(vb):
                raise ValueError(f"{inst}: {a} has {len(va)} runs but {b} has {len(vb)}")
            tests.append(stats.wilcoxon_signed_rank(va, vb))
        adjusted = stats.bonferroni([t.pvalue for t in tests], max(len(pairs), 1))
        for (a, b), t, p_adj in zip(pairs, tests, adjusted):
            mean_a = sum(r.best_avg_distance_m for r in presets[a]) / len(presets[a])
            mean_b = sum(r.best_avg_distance_m for r in presets[b]) / len(presets[b])
            better = a if mean_a < mean_b else b if mean_b < mean_a else "tie"
            rows.append({"instance": inst, "a": a, "b": b, "n": t.n, "statistic": t.statistic,
                         "p": t.pvalue, "p_adj": p_adj, "m": len(pairs), "method": t.method,
                         "better": better})
    return rows
