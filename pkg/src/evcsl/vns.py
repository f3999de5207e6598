"""Variable neighbourhood search with shake, interchange and IALT searches.

The outer structure follows the classic nested loop: for each of up to ``K``
rounds, shake intensities ``i = 1..k_max`` are tried in turn; every shaken
solution is driven to a first-improvement local optimum and accepted only if
strictly better. Any acceptance restarts both loops; ``K * k_max``
consecutive failures end the search.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from evcsl import _kernels as K
from evcsl.model import (DELTA_RTOL, Evaluation, Instance, Solution, _finish,
                         compare, evaluate, random_solution)
from evcsl.run import Budget, BudgetClock, RunResult

NEIGHBORHOOD_MODELS = ("quadratic", "closest")

# above this many candidates, coordinate instances rank neighbours with a k-d tree
KDTREE_MIN_CANDIDATES = 2000

# pairs per interchange call when a wall-clock deadline must be polled
FI_CHUNK = 200_000


@dataclass(frozen=True)
class VnsConfig:
    neighborhood_model: str = "closest"
    neighborhood_size: int = 6
    shake: str = "random"
    next: str = "none"
    localsearch: str = "ialt"
    ialt_iters: int = 20
    localsearch2: str = "fi"
    k_max: int = 34
    max_non_improving: int = 59     # K
    accept: str = "elitist"

    def __post_init__(self):
        if self.neighborhood_model not in NEIGHBORHOOD_MODELS:
            raise ValueError(f"neighborhood_model must be one of {NEIGHBORHOOD_MODELS}")
        if self.neighborhood_size < 1:
            raise ValueError("neighborhood_size must be >= 1")
        if self.k_max < 1 or self.max_non_improving < 1:
            raise ValueError("k_max and max_non_improving must be >= 1")
        if self.ialt_iters < 0:
            raise ValueError("ialt_iters must be >= 0")
        for value, allowed, label in ((self.shake, ("random",), "shake"),
                                      (self.next, ("none",), "next"),
                                      (self.localsearch, ("none", "ialt"), "localsearch"),
                                      (self.localsearch2, ("fi",), "localsearch2"),
                                      (self.accept, ("elitist",), "accept")):
            if value not in allowed:
                raise ValueError(f"{label} must be one of {allowed}, got {value!r}")

    def rank_depth(self, n_candidates: int) -> int:
        width = self.neighborhood_size
        if self.neighborhood_model == "quadratic":
            width *= self.k_max
        return max(min(width, n_candidates - 1), 1)


VNS_PRESETS = {
    "VNS-1": VnsConfig("quadratic", 17, "random", "none", "none", 20, "fi", 44, 85, "elitist"),
    "VNS-2": VnsConfig("closest", 6, "random", "none", "ialt", 20, "fi", 34, 59, "elitist"),
}


# --------------------------------------------------------------------------
# neighbourhoods
# --------------------------------------------------------------------------


def _candidate_points(instance: Instance) -> np.ndarray:
    """Points whose Euclidean distances order candidates by proximity."""
    if instance.candidate_coords is None:
        # matrix-only instances: compare candidates by their client-distance profiles
        return instance.dcT
    pts = instance.candidate_coords
    if instance.metric == "haversine":
        lon, lat = np.radians(pts[:, 0]), np.radians(pts[:, 1])
        # chord length on the unit sphere is monotone in great-circle distance
        return np.column_stack((np.cos(lat) * np.cos(lon), np.cos(lat) * np.sin(lon),
                                np.sin(lat)))
    return pts


def _sort_rows(idx, dist):
    order = np.lexsort((idx, dist), axis=-1)
    return np.take_along_axis(idx, order, axis=-1)


def candidate_ranks(instance: Instance, depth: Optional[int] = None) -> np.ndarray:
    """Row s lists the other candidates nearest-first (ties by index),
    truncated to ``depth`` columns (default: all M - 1)."""
    m = instance.n_candidates
    depth = m - 1 if depth is None else max(min(depth, m - 1), 0)
    key = ("ranks", depth)
    if key in instance._cache:
        return instance._cache[key]
    pts = _candidate_points(instance)
    if depth == 0:
        ranks = np.empty((m, 0), np.int32)
    elif instance.candidate_coords is not None and m > KDTREE_MIN_CANDIDATES:
        dist, idx = cKDTree(pts).query(pts, k=depth + 1)
        keep = np.argsort(idx == np.arange(m)[:, None], axis=1, kind="stable")[:, :depth]
        idx = np.take_along_axis(idx, keep, axis=1)
        dist = np.take_along_axis(dist, keep, axis=1)
        ranks = _sort_rows(idx, dist).astype(np.int32)
    else:
        ranks = np.empty((m, depth), np.int32)
        step = max(1, 2_000_000 // max(m, 1))
        cols = np.arange(m)
        for lo in range(0, m, step):
            hi = min(lo + step, m)
            d = cdist(pts[lo:hi], pts)
            d[np.arange(hi - lo), np.arange(lo, hi)] = np.inf
            if depth < m - 1:
                part = np.argpartition(d, depth - 1, axis=1)[:, :depth]
                # argpartition is arbitrary among ties at the cut; keep the lowest indices
                cut = np.take_along_axis(d, part, axis=1).max(axis=1, keepdims=True)
                for r in range(hi - lo):
                    below = np.flatnonzero(d[r] < cut[r])
                    tied = np.flatnonzero(d[r] == cut[r])[:depth - below.size]
                    part[r] = np.concatenate((below, tied))
            else:
                part = np.broadcast_to(cols, d.shape)
                part = part[~np.isinf(d)].reshape(hi - lo, m - 1)
            ranks[lo:hi] = _sort_rows(part, np.take_along_axis(d, part, axis=1))
    ranks.setflags(write=False)
    instance._cache[key] = ranks
    return ranks


def neighborhood_width(model: str, size: int, k: int, n_candidates: int) -> int:
    if model == "closest":
        width = size
    elif model == "quadratic":
        width = size * k
    else:
        raise ValueError(f"unknown neighborhood model {model!r}")
    return min(width, n_candidates - 1)


def shake_random(x: Solution, k: int, ranks: np.ndarray, model: str, size: int,
                 rng: np.random.Generator) -> Solution:
    """Apply k random swaps, each opening a closed neighbour of the closed site."""
    n_cand = ranks.shape[0]
    a = x.as_array()
    K.shake_moves(a, int(k), ranks, neighborhood_width(model, size, k, n_cand), n_cand, rng)
    return Solution.from_array(a)


def next_k(i: int, k_max: int, mode: str = "none") -> int:
    """Shake intensity for step i; the ``none`` schedule is the identity."""
    if mode != "none":
        raise ValueError(f"unknown next mode {mode!r}")
    if not 1 <= i <= k_max:
        raise ValueError(f"need 1 <= i <= k_max, got i={i}, k_max={k_max}")
    return i


# --------------------------------------------------------------------------
# local searches
# --------------------------------------------------------------------------


def local_search_fi(instance: Instance, ev: Evaluation, rng: np.random.Generator,
                    clock: Optional[BudgetClock] = None) -> Evaluation:
    """First-improvement interchange.

    Each pass visits (closed, open) pairs in a fresh random order and applies
    the first strictly improving swap, then starts a new pass. Ends when a
    full pass finds nothing or the clock runs out.
    """
    if clock is not None and clock.exhausted():
        return ev
    m, ms = instance.n_candidates, ev.open.size
    open_idx = ev.open.copy()
    pos = np.full(m, -1, np.int64)
    pos[open_idx] = np.arange(ms)
    n1, d1 = ev.nearest.copy(), ev.nearest_dist.copy()
    n2, d2 = ev.second.copy(), ev.second_dist.copy()
    assign = ev.substation_assignment.copy()
    fstate = np.array([ev.objective])
    istate = np.array([ev.dc_violations, int(ev.substation_feasible), 0, 0, 1, 0], np.int64)
    perm_in = np.empty(m - ms, np.int64)
    perm_out = np.empty(ms, np.int64)
    timed = clock is not None and clock.budget.seconds is not None
    while True:
        limit = np.iinfo(np.int64).max if clock is None else clock.remaining_evals()
        if timed:
            limit = min(limit, FI_CHUNK)
        used, done = K.fi_descend(*instance.kernel_args(), open_idx, pos, n1, d1, n2, d2,
                                  assign, fstate, istate, perm_in, perm_out, rng,
                                  limit, DELTA_RTOL)
        if clock is not None:
            clock.tick(int(used))
        if done or (clock is not None and clock.exhausted()):
            break
    if istate[5] == 0:
        return ev
    return _finish(instance, open_idx, n1, d1, n2, d2)


def local_search_ialt(instance: Instance, ev: Evaluation, iters: int,
                      clock: Optional[BudgetClock] = None) -> Evaluation:
    """Alternate allocation and relocation for up to ``iters`` rounds.

    Clients go to their nearest station; each station then moves to the
    candidate minimising the weighted distance to its own clients (stations
    handled in index order, occupied sites skipped). Stops early when no
    station moves. Returns the best state seen.
    """
    best = cur = ev
    for _ in range(iters):
        if clock is not None and clock.exhausted():
            break
        new_open, moved = K.ialt_relocate(instance.dcT, instance.users, cur.open, cur.nearest)
        if not moved:
            break
        cur = evaluate(instance, Solution.from_array(new_open))
        if clock is not None:
            clock.tick()
        if compare(cur, best) < 0:
            best = cur
    return best


# --------------------------------------------------------------------------
# driver
# --------------------------------------------------------------------------


def run_vns(instance: Instance, config: VnsConfig, seed: int, budget: Budget,
            preset: str = "custom") -> RunResult:
    rng = np.random.default_rng(seed)
    ranks = candidate_ranks(instance, config.rank_depth(instance.n_candidates))
    clock = BudgetClock(budget)
    total = instance.total_users

    x = evaluate(instance, random_solution(instance, rng))
    clock.tick()
    if config.localsearch == "ialt":
        x = local_search_ialt(instance, x, config.ialt_iters, clock)
    trajectory = [(clock.evals, x.violations, x.avg_distance)]

    improved = True
    while improved and not clock.exhausted():
        improved = False
        j = 1
        while not improved and j <= config.max_non_improving and not clock.exhausted():
            i = 1
            while not improved and i <= config.k_max and not clock.exhausted():
                k = next_k(i, config.k_max, config.next)
                shaken = shake_random(x.solution, k, ranks, config.neighborhood_model,
                                      config.neighborhood_size, rng)
                cand = evaluate(instance, shaken)
                clock.tick()
                cand = local_search_fi(instance, cand, rng, clock)
                if compare(cand, x) < 0:
                    x = cand
                    improved = True
                trajectory.append((clock.evals, x.violations, x.avg_distance))
                i += 1
            j += 1

    return RunResult("vns", preset, seed, x, clock.evals, clock.elapsed(),
                     np.array(trajectory, dtype=np.float64))
