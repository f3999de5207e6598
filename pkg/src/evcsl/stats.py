"""Summary statistics, paired signed-rank tests and improvement ECDFs."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

EXACT_MAX_N = 20


@dataclass(frozen=True)
class Summary:
    n: int
    mean: float
    sd: float       # sample sd (n - 1); nan when n == 1
    min: float
    median: float
    max: float

    def scaled(self, factor: float) -> "Summary":
        return Summary(self.n, self.mean * factor, self.sd * factor, self.min * factor,
                       self.median * factor, self.max * factor)

    def row(self) -> dict:
        return {"mean_sd": format_mean_sd(self.mean, self.sd), "min": f"{self.min:.2f}",
                "median": f"{self.median:.2f}", "max": f"{self.max:.2f}"}


def summarize(values: Sequence[float], scale: float = 1.0) -> Summary:
    """Mean, sample sd, min, median, max, optionally multiplied by ``scale``
    (0.01 reproduces tables reported in units of 10^2)."""
    a = np.asarray(values, dtype=np.float64)
    if a.size == 0:
        raise ValueError("cannot summarise an empty sample")
    sd = float(a.std(ddof=1)) if a.size > 1 else math.nan
    s = Summary(int(a.size), float(a.mean()), sd, float(a.min()), float(np.median(a)),
                float(a.max()))
    return s.scaled(scale) if scale != 1.0 else s


def format_mean_sd(mean: float, sd: float) -> str:
    """``11.21±0.075``: mean to two decimals, sd to two significant digits."""
    if math.isnan(sd):
        return f"{mean:.2f}"
    sd_txt = f"{sd:#.2g}".rstrip(".") if sd != 0 else "0"
    if "e" in sd_txt:
        sd_txt = f"{sd:.2f}"
    return f"{mean:.2f}±{sd_txt}"


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float    # min(W+, W-)
    pvalue: float       # two-sided
    n: int              # non-zero differences used
    method: str         # "exact" | "normal" | "all-zero"

    @property
    def all_zero(self) -> bool:
        return self.method == "all-zero"


def midranks(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(x.size)
    xs = x[order]
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and xs[j + 1] == xs[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def _exact_lower_tail(ranks2: np.ndarray, w2: int) -> float:
    """P(W+ <= w) under the null, counting all 2^n sign patterns.

    Ranks are doubled so midranks stay integral; counts are accumulated by a
    subset-sum table over the doubled ranks.
    """
    total = int(ranks2.sum())
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    for r in ranks2:
        r = int(r)
        counts[r:] = counts[r:] + counts[:total + 1 - r].copy()
    return float(counts[:w2 + 1].sum() / 2.0 ** ranks2.size)


def wilcoxon_signed_rank(a: Sequence[float], b: Sequence[float],
                         method: str = "auto") -> WilcoxonResult:
    """Two-sided paired signed-rank test of a vs b.

    Zero differences are dropped. ``auto`` uses the exact null distribution
    for up to 20 pairs, otherwise a normal approximation with tie and
    continuity corrections; ``exact`` and ``normal`` force one or the other.
    """
    if method not in ("auto", "exact", "normal"):
        raise ValueError(f"unknown method {method!r}")
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"paired samples must have equal length, got {a.shape} and {b.shape}")
    d = a - b
    d = d[d != 0]
    n = d.size
    if n == 0:
        return WilcoxonResult(0.0, 1.0, 0, "all-zero")
    r = midranks(np.abs(d))
    w_plus = float(r[d > 0].sum())
    w_minus = float(r[d < 0].sum())
    stat = min(w_plus, w_minus)
    if method == "exact" or (method == "auto" and n <= EXACT_MAX_N):
        p = 2.0 * _exact_lower_tail(np.rint(2 * r).astype(np.int64), int(round(2 * stat)))
        return WilcoxonResult(stat, min(1.0, p), n, "exact")
    mean = n * (n + 1) / 4.0
    _, tie_counts = np.unique(np.abs(d), return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - float((tie_counts ** 3 - tie_counts).sum()) / 48.0
    z = max(abs(w_plus - mean) - 0.5, 0.0) / math.sqrt(var)
    p = math.erfc(z / math.sqrt(2.0))
    return WilcoxonResult(stat, min(1.0, p), n, "normal")


def bonferroni(pvals: Sequence[float], m: int) -> list[float]:
    pvals = list(pvals)
    if m < len(pvals):
        raise ValueError(f"m={m} is smaller than the number of p-values ({len(pvals)})")
    return [min(1.0, m * p) for p in pvals]


def improvement_ecdf(best_values: Sequence[float], baseline: float) -> list[tuple[float, float]]:
    """Step points (improvement %, cumulative fraction) over the baseline value."""
    if not baseline > 0:
        raise ValueError("baseline must be > 0")
    v = np.asarray(best_values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("no runs to compare")
    imp = 100.0 * (baseline - v) / baseline
    xs, counts = np.unique(imp, return_counts=True)
    return [(float(x), float(c) / v.size) for x, c in zip(xs, np.cumsum(counts))]
