"""Generational genetic algorithm over fixed-size open sets.

Each generation draws ``lam`` offspring: two parents by size-2 tournaments,
optional CUPCAP crossover, single-swap mutation. The population is then
replaced in (mu, lambda) or (mu + lambda) fashion. The best individual ever
seen is tracked apart from the population.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from evcsl import _kernels as K
from evcsl.model import Evaluation, Instance, Solution, evaluate
from evcsl.run import Budget, BudgetClock, RunResult

SELECTION_MODES = ("worse-one", "better-one")
CROSSOVER_MODES = ("none", "cupcap")
MUTATION_MODES = ("random",)
REPLACEMENT_MODES = ("comma", "plus")


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 50
    lam: int = 6
    selection: str = "better-one"
    crossover: str = "cupcap"
    mutation: str = "random"
    mutation_prob: float = 0.76
    replacement: str = "plus"

    def __post_init__(self):
        if self.population_size < 1:
            raise ValueError("population_size must be >= 1")
        if self.lam < 1:
            raise ValueError("lam must be >= 1")
        if not 0.0 <= self.mutation_prob <= 1.0:
            raise ValueError("mutation_prob must lie in [0, 1]")
        for value, allowed, label in ((self.selection, SELECTION_MODES, "selection"),
                                      (self.crossover, CROSSOVER_MODES, "crossover"),
                                      (self.mutation, MUTATION_MODES, "mutation"),
                                      (self.replacement, REPLACEMENT_MODES, "replacement")):
            if value not in allowed:
                raise ValueError(f"{label} must be one of {allowed}, got {value!r}")


GA_PRESETS = {
    "GA-1": GaConfig(30, 12, "worse-one", "none", "random", 0.65, "comma"),
    "GA-2": GaConfig(50, 6, "better-one", "cupcap", "random", 0.76, "plus"),
}


def _keys(population: Sequence[Evaluation]):
    v = np.array([ev.violations for ev in population], dtype=np.int64)
    o = np.array([ev.objective for ev in population], dtype=np.float64)
    return v, o


def select_parents(population: Sequence[Evaluation], mode: str, rng: np.random.Generator):
    """Two parents, each the winner (better-one) or loser (worse-one) of a
    uniform size-2 tournament drawn with replacement."""
    if not population:
        raise ValueError("empty population")
    if mode not in SELECTION_MODES:
        raise ValueError(f"unknown selection mode {mode!r}")
    v, o = _keys(population)
    i, j = K.select_pair(v, o, mode == "better-one", rng)
    return population[i], population[j]


def crossover_cupcap(p1: Solution, p2: Solution, rng: np.random.Generator) -> Solution:
    """Child keeps every site open in both parents and fills the rest
    uniformly from sites open in exactly one of them."""
    if len(p1) != len(p2):
        raise ValueError("parents must open the same number of sites")
    child = np.empty(len(p1), np.int64)
    K.cupcap(p1.as_array(), p2.as_array(), rng, child)
    return Solution.from_array(child)


def crossover(p1: Solution, p2: Solution, mode: str, rng: np.random.Generator) -> Solution:
    if mode == "none":
        return p1
    if mode == "cupcap":
        return crossover_cupcap(p1, p2, rng)
    raise ValueError(f"unknown crossover mode {mode!r}")


def mutate_random(x: Solution, prob: float, n_candidates: int,
                  rng: np.random.Generator) -> Solution:
    """With probability ``prob`` swap one random open site for a random closed one."""
    a = x.as_array()
    K.mutate_swap(a, float(prob), int(n_candidates), rng)
    return Solution.from_array(a)


def replace(pop: Sequence[Evaluation], offspring: Sequence[Evaluation], mode: str) -> list:
    """Next population.

    plus: best ``len(pop)`` of pop and offspring together. comma: the best
    offspring; when there are fewer offspring than population slots, the
    remaining slots go to the best members of the old population.
    """
    if mode not in REPLACEMENT_MODES:
        raise ValueError(f"unknown replacement mode {mode!r}")
    mu = len(pop)
    if mode == "plus":
        pool = list(pop) + list(offspring)
        v, o = _keys(pool)
        return [pool[q] for q in K.rank_order(v, o)[:mu]]
    v, o = _keys(offspring)
    new = [offspring[q] for q in K.rank_order(v, o)[:mu]]
    if len(new) < mu:
        v, o = _keys(pop)
        new += [pop[q] for q in K.rank_order(v, o)[:mu - len(new)]]
    return new


def run_ga(instance: Instance, config: GaConfig, seed: int, budget: Budget,
           preset: str = "custom") -> RunResult:
    rng = np.random.default_rng(seed)
    clock = BudgetClock(budget)
    args = instance.kernel_args()
    mu, ms = config.population_size, instance.n_stations
    total = instance.total_users

    pop = np.empty((mu, ms), np.int64)
    pop_v = np.empty(mu, np.int64)
    pop_o = np.empty(mu)
    perm = np.arange(instance.n_candidates, dtype=np.int64)
    K.ga_init(*args, pop, pop_v, pop_o, perm, rng)
    clock.tick(mu)

    b = int(K.rank_order(pop_v, pop_o)[0])
    best = pop[b].copy()
    best_key = np.array([pop_v[b], pop_o[b]], dtype=np.float64)
    trajectory = [np.array([[clock.evals, best_key[0], best_key[1] / total]])]

    timed = budget.seconds is not None
    gens = 1
    while not clock.exhausted():
        if not timed:
            gens = clock.remaining_evals() // config.lam + 1
        traj_e = np.empty(gens, np.int64)
        traj_v = np.empty(gens, np.int64)
        traj_o = np.empty(gens)
        t0 = clock.elapsed()
        evals, done = K.ga_generations(
            *args, pop, pop_v, pop_o, best, best_key, config.lam,
            config.selection == "better-one", config.crossover == "cupcap",
            config.mutation_prob, config.replacement == "plus", rng,
            clock.evals, clock.max_evals, gens, traj_e, traj_v, traj_o)
        clock.evals = int(evals)
        trajectory.append(np.column_stack((traj_e[:done], traj_v[:done], traj_o[:done] / total)))
        if timed:
            # aim for chunks of ~20 ms so the deadline is honoured promptly
            spent = max(clock.elapsed() - t0, 1e-6)
            gens = int(min(max(gens * 0.02 / spent, 1), 10 * gens + 1))

    return RunResult("ga", preset, seed, evaluate(instance, Solution.from_array(best)),
                     clock.evals, clock.elapsed(), np.concatenate(trajectory))
