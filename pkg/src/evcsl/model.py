"""Problem data, solution evaluation and the exhaustive oracle.

An instance holds N population-weighted clients, M candidate sites and T
substations. A solution opens exactly ``n_stations`` candidates. Every client
is served by its nearest open station; the objective is the population-weighted
sum of those distances. Substations feed open stations within
``max_substation_dist`` and at most ``substation_capacity[e]`` each.

Solutions are ranked lexicographically: fewer violations first (clients
farther than ``max_client_dist`` plus one if no substation assignment
exists), then lower objective.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from evcsl import _kernels as K

UNBOUNDED = math.inf

# relative tolerance used when an incremental delta decides "strictly better"
DELTA_RTOL = 1e-9

MAX_ENUMERATION = 10**7


class InstanceError(ValueError):
    """Instance data violates a structural invariant."""


class SolutionError(ValueError):
    """Solution is not a valid open set for the instance."""


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, order="C")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Instance:
    users: np.ndarray
    dc: np.ndarray
    de: np.ndarray
    substation_capacity: np.ndarray
    n_stations: int
    max_client_dist: float = UNBOUNDED
    max_substation_dist: float = UNBOUNDED
    name: str = "instance"
    # optional geometry the matrices were built from
    metric: Optional[str] = None
    client_coords: Optional[np.ndarray] = None
    candidate_coords: Optional[np.ndarray] = None
    substation_coords: Optional[np.ndarray] = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "users", _frozen(self.users, np.float64))
        set_(self, "dc", _frozen(self.dc, np.float64))
        set_(self, "de", _frozen(self.de, np.float64))
        set_(self, "substation_capacity", _frozen(self.substation_capacity, np.int64))
        set_(self, "n_stations", int(self.n_stations))
        set_(self, "max_client_dist", float(self.max_client_dist))
        set_(self, "max_substation_dist", float(self.max_substation_dist))
        for name in ("client_coords", "candidate_coords", "substation_coords"):
            val = getattr(self, name)
            if val is not None:
                set_(self, name, _frozen(val, np.float64))
        self._validate()

    def _validate(self):
        u, dc, de, mp = self.users, self.dc, self.de, self.substation_capacity
        if u.ndim != 1 or u.size == 0:
            raise InstanceError("users: expected a non-empty 1-d array")
        if dc.ndim != 2 or dc.shape[0] != u.size or dc.shape[1] == 0:
            raise InstanceError(f"dc: expected shape ({u.size}, M>0), got {dc.shape}")
        n_cand = dc.shape[1]
        if mp.ndim != 1 or mp.size == 0:
            raise InstanceError("substation_capacity: expected a non-empty 1-d array of capacities")
        if de.shape != (mp.size, n_cand):
            raise InstanceError(f"de: expected shape ({mp.size}, {n_cand}), got {de.shape}")
        if not np.all(np.isfinite(u)) or np.any(u <= 0):
            raise InstanceError("users: every client weight must be finite and > 0")
        for label, m in (("dc", dc), ("de", de)):
            if not np.all(np.isfinite(m)):
                raise InstanceError(f"{label}: distances must be finite")
            if np.any(m < 0):
                raise InstanceError(f"{label}: negative distance")
        if np.any(mp < 0):
            raise InstanceError("substation_capacity: capacities must be non-negative")
        if not 1 <= self.n_stations <= n_cand:
            raise InstanceError(f"n_stations: need 1 <= Ms <= {n_cand}, got {self.n_stations}")
        if int(mp.sum()) < self.n_stations:
            raise InstanceError(
                f"substation_capacity: total {int(mp.sum())} < n_stations {self.n_stations}")
        for label, lim in (("max_client_dist", self.max_client_dist),
                           ("max_substation_dist", self.max_substation_dist)):
            if math.isnan(lim) or lim < 0:
                raise InstanceError(f"{label}: must be >= 0 or unbounded")

    @property
    def n_clients(self) -> int:
        return self.dc.shape[0]

    @property
    def n_candidates(self) -> int:
        return self.dc.shape[1]

    @property
    def n_substations(self) -> int:
        return self.de.shape[0]

    @property
    def total_users(self) -> float:
        return float(self.users.sum())

    @property
    def dcT(self) -> np.ndarray:
        if "dcT" not in self._cache:
            self._cache["dcT"] = np.ascontiguousarray(self.dc.T)
        return self._cache["dcT"]

    @property
    def compat(self) -> np.ndarray:
        """(M, T) mask: substation e may feed candidate s."""
        if "compat" not in self._cache:
            self._cache["compat"] = np.ascontiguousarray((self.de <= self.max_substation_dist).T)
        return self._cache["compat"]

    @property
    def always_feasible(self) -> bool:
        if "always_feasible" not in self._cache:
            self._cache["always_feasible"] = bool(
                self.compat.all() and self.substation_capacity.sum() >= self.n_stations)
        return self._cache["always_feasible"]

    def kernel_args(self):
        return (self.dcT, self.users, self.max_client_dist, self.compat,
                self.substation_capacity, self.always_feasible)

    def with_stations(self, n_stations: int) -> "Instance":
        """Same data with a different station count."""
        inst = Instance(
            users=self.users, dc=self.dc, de=self.de,
            substation_capacity=self.substation_capacity, n_stations=n_stations,
            max_client_dist=self.max_client_dist,
            max_substation_dist=self.max_substation_dist, name=self.name,
            metric=self.metric, client_coords=self.client_coords,
            candidate_coords=self.candidate_coords,
            substation_coords=self.substation_coords)
        if "dcT" in self._cache:
            inst._cache["dcT"] = self._cache["dcT"]
        return inst

    def __getstate__(self):
        state = dict(self.__dict__)
        state["_cache"] = {}
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)


@dataclass(frozen=True)
class Solution:
    """Open candidate indices, sorted and duplicate-free."""

    open: tuple

    def __post_init__(self):
        vals = tuple(sorted(int(s) for s in self.open))
        if len(set(vals)) != len(vals):
            raise SolutionError("open: duplicate candidate index")
        object.__setattr__(self, "open", vals)

    @classmethod
    def from_array(cls, a) -> "Solution":
        return cls(tuple(int(s) for s in a))

    def as_array(self) -> np.ndarray:
        return np.array(self.open, dtype=np.int64)

    def validate(self, instance: Instance) -> "Solution":
        if len(self.open) != instance.n_stations:
            raise SolutionError(
                f"open: expected {instance.n_stations} stations, got {len(self.open)}")
        if self.open and (self.open[0] < 0 or self.open[-1] >= instance.n_candidates):
            raise SolutionError(
                f"open: indices must lie in [0, {instance.n_candidates})")
        return self

    def __len__(self):
        return len(self.open)


@dataclass(eq=False)
class Evaluation:
    """Full evaluated state of one solution.

    ``nearest``/``second`` hold candidate indices per client (second is -1 and
    its distance inf when only one station is open). ``substation_assignment``
    is aligned with ``open`` and holds -1 for stations left unfed.
    """

    open: np.ndarray
    nearest: np.ndarray
    nearest_dist: np.ndarray
    second: np.ndarray
    second_dist: np.ndarray
    objective: float
    avg_distance: float
    substation_assignment: np.ndarray
    dc_violations: int
    substation_feasible: bool

    @property
    def violations(self) -> int:
        return self.dc_violations + (0 if self.substation_feasible else 1)

    @property
    def feasible(self) -> bool:
        return self.violations == 0

    @property
    def key(self) -> tuple:
        return (self.violations, self.objective)

    @property
    def solution(self) -> Solution:
        return Solution.from_array(self.open)

    def copy(self) -> "Evaluation":
        return Evaluation(
            self.open.copy(), self.nearest.copy(), self.nearest_dist.copy(),
            self.second.copy(), self.second_dist.copy(), self.objective,
            self.avg_distance, self.substation_assignment.copy(),
            self.dc_violations, self.substation_feasible)

    def same_state(self, other: "Evaluation") -> bool:
        """Field-by-field exact equality."""
        arrays = ("open", "nearest", "nearest_dist", "second", "second_dist",
                  "substation_assignment")
        return (all(np.array_equal(getattr(self, a), getattr(other, a)) for a in arrays)
                and self.objective == other.objective
                and self.avg_distance == other.avg_distance
                and self.dc_violations == other.dc_violations
                and self.substation_feasible == other.substation_feasible)


def _finish(instance, open_idx, n1, d1, n2, d2):
    assign = np.empty(open_idx.size, np.int64)
    matched = K.match_stations(open_idx, instance.compat, instance.substation_capacity, assign)
    obj = K.weighted_sum(instance.users, d1)
    return Evaluation(
        open=open_idx, nearest=n1, nearest_dist=d1, second=n2, second_dist=d2,
        objective=obj, avg_distance=obj / instance.total_users,
        substation_assignment=assign,
        dc_violations=int(K.count_above(d1, instance.max_client_dist)),
        substation_feasible=bool(matched == open_idx.size))


def evaluate(instance: Instance, solution) -> Evaluation:
    """Evaluate a Solution (or a sequence of open indices) from scratch."""
    if not isinstance(solution, Solution):
        solution = Solution(tuple(solution))
    solution.validate(instance)
    open_idx = solution.as_array()
    n1, d1, n2, d2 = K.top2(instance.dcT, open_idx)
    return _finish(instance, open_idx, n1, d1, n2, d2)


def check_substation_feasibility(instance: Instance, solution) -> tuple[bool, np.ndarray]:
    """Whether every open station can be fed; returns (feasible, assignment).

    The assignment is aligned with the sorted open indices; -1 marks a
    station left unfed when infeasible.
    """
    if not isinstance(solution, Solution):
        solution = Solution(tuple(solution))
    open_idx = solution.validate(instance).as_array()
    assign = np.empty(open_idx.size, np.int64)
    matched = K.match_stations(open_idx, instance.compat, instance.substation_capacity, assign)
    return matched == open_idx.size, assign


def compare(a: Evaluation, b: Evaluation) -> int:
    """-1 if a is better, 1 if b is better, 0 on an exact tie."""
    ka, kb = a.key, b.key
    if ka < kb:
        return -1
    if kb < ka:
        return 1
    return 0


def _swap_position(ev: Evaluation, close: int, open_: int, n_candidates: int) -> int:
    hits = np.flatnonzero(ev.open == close)
    if hits.size == 0:
        raise SolutionError(f"candidate {close} is not open")
    if not 0 <= open_ < n_candidates:
        raise SolutionError(f"candidate {open_} out of range")
    if np.any(ev.open == open_):
        raise SolutionError(f"candidate {open_} is already open")
    return int(hits[0])


def _positions(instance, open_idx):
    pos = np.full(instance.n_candidates, -1, np.int64)
    pos[open_idx] = np.arange(open_idx.size)
    return pos


def delta_swap(instance: Instance, ev: Evaluation, close: int, open: int) -> float:
    """Objective change of closing ``close`` and opening ``open``, in O(N)."""
    p = _swap_position(ev, close, open, instance.n_candidates)
    ms = ev.open.size
    gain, vgain = np.empty(1), np.empty(1, np.int64)
    loss, vloss = np.empty(ms), np.empty(ms, np.int64)
    K.swap_row(instance.dcT, instance.users, instance.max_client_dist, int(open),
               _positions(instance, ev.open), ev.nearest, ev.nearest_dist,
               ev.second_dist, gain, loss, vgain, vloss)
    return float(gain[0] + loss[p])


def apply_swap(instance: Instance, ev: Evaluation, close: int, open: int) -> Evaluation:
    """Evaluation of the swapped solution, updated incrementally."""
    p = _swap_position(ev, close, open, instance.n_candidates)
    new = ev.copy()
    K.apply_swap_state(instance.dcT, new.open, _positions(instance, ev.open),
                       new.nearest, new.nearest_dist, new.second, new.second_dist,
                       p, int(open))
    return _finish(instance, new.open, new.nearest, new.nearest_dist,
                   new.second, new.second_dist)


def brute_force_optimum(instance: Instance) -> tuple[Solution, Evaluation]:
    """Best Ms-subset by exhaustive enumeration.

    Ties go to the lexicographically smallest open set. If no subset is
    feasible the best infeasible one is returned; check ``ev.feasible``.
    """
    total = math.comb(instance.n_candidates, instance.n_stations)
    if total > MAX_ENUMERATION:
        raise ValueError(
            f"C({instance.n_candidates}, {instance.n_stations}) = {total} subsets "
            f"exceeds the enumeration limit {MAX_ENUMERATION}")
    best, _, _, _ = K.enumerate_best(*instance.kernel_args(), instance.n_stations)
    sol = Solution.from_array(best)
    return sol, evaluate(instance, sol)


def random_solution(instance: Instance, rng: np.random.Generator) -> Solution:
    perm = np.arange(instance.n_candidates, dtype=np.int64)
    out = np.empty(instance.n_stations, np.int64)
    K.random_subset(perm, instance.n_stations, rng, out)
    return Solution.from_array(out)
