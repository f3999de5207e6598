"""Stopping budgets and run results shared by both solvers."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from evcsl.model import Evaluation, Solution


@dataclass(frozen=True)
class Budget:
    """Stop after ``seconds`` of wall-clock time or ``evals`` evaluations,
    whichever comes first.

    One evaluation is one candidate solution assessed: a full evaluation
    or one swap delta in the interchange search.
    """

    seconds: Optional[float] = None
    evals: Optional[int] = None

    def __post_init__(self):
        if self.seconds is None and self.evals is None:
            raise ValueError("budget needs seconds and/or evals")
        if self.seconds is not None and self.seconds < 0:
            raise ValueError("budget seconds must be >= 0")
        if self.evals is not None and self.evals < 0:
            raise ValueError("budget evals must be >= 0")


class BudgetClock:
    def __init__(self, budget: Budget):
        self.budget = budget
        self.evals = 0
        self.start = time.perf_counter()
        self.max_evals = budget.evals if budget.evals is not None else np.iinfo(np.int64).max

    def elapsed(self) -> float:
        return time.perf_counter() - self.start

    def remaining_evals(self) -> int:
        return max(self.max_evals - self.evals, 0)

    def out_of_time(self) -> bool:
        return self.budget.seconds is not None and self.elapsed() >= self.budget.seconds

    def exhausted(self) -> bool:
        return self.evals >= self.max_evals or self.out_of_time()

    def tick(self, n: int = 1):
        self.evals += n


@dataclass
class RunResult:
    algorithm: str
    preset: str
    seed: int
    best: Evaluation
    evals: int
    elapsed: float
    # one row per iteration: (evals so far, violations, best avg distance)
    trajectory: np.ndarray = field(default_factory=lambda: np.empty((0, 3)))

    @property
    def solution(self) -> Solution:
        return self.best.solution

    @property
    def best_avg_distance(self) -> float:
        return self.best.avg_distance

    def summary(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "preset": self.preset,
            "seed": self.seed,
            "avg_distance": self.best.avg_distance,
            "objective": self.best.objective,
            "violations": self.best.violations,
            "feasible": self.best.feasible,
            "evals": self.evals,
            "wall_s": round(self.elapsed, 3),
        }
