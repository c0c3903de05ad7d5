"""Genetic algorithm over fixed-size station sets.

Chromosomes are sorted k-subsets of candidate node ids. Each generation is
evaluated, roulette-selected (smaller fitness is better), randomly paired
for set-based crossover and mutated by single-gene replacement. There is no
elitism; the best plan ever seen is tracked outside the population.
"""

from __future__ import annotations

import csv
import itertools
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .detoursim import StationPlan
from .errors import GaConfigError, NoReplacementCandidateError

WORKERS_ENV = "EVDETOUR_WORKERS"

Evaluator = Callable[[StationPlan], float]


@dataclass
class GaConfig:
    pop_size: int = 1500
    k: int = 15
    p_cross: float = 0.3
    p_mut: float = 0.2
    max_iter: int = 300
    seed: int = 0
    selection_floor: float = 0.01

    def check(self, n_candidates: int) -> None:
        if not (0.0 <= self.p_cross <= 1.0 and 0.0 <= self.p_mut <= 1.0):
            raise GaConfigError("p_cross and p_mut must lie in [0, 1]")
        if not 1 <= self.k <= n_candidates:
            raise GaConfigError(f"k={self.k} must be in 1..{n_candidates}")
        if self.pop_size < 1:
            raise GaConfigError("pop_size must be positive")
        if self.pop_size > math.comb(n_candidates, self.k):
            raise GaConfigError(
                f"pop_size={self.pop_size} exceeds the {math.comb(n_candidates, self.k)} distinct plans"
            )
        if self.max_iter < 0:
            raise GaConfigError("max_iter must be non-negative")
        if self.selection_floor < 0:
            raise GaConfigError("selection_floor must be non-negative")


@dataclass
class Population:
    individuals: list[StationPlan]
    fitnesses: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.individuals)


@dataclass(frozen=True)
class HistoryRow:
    iteration: int
    best_fitness_km: float
    mean_fitness_km: float
    best_so_far_km: float
    best_so_far_plan: tuple[int, ...]


@dataclass
class GaHistory:
    rows: list[HistoryRow] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    def best_so_far(self) -> list[float]:
        return [r.best_so_far_km for r in self.rows]

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "best_fitness_km", "mean_fitness_km", "best_so_far_km"])
            for r in self.rows:
                w.writerow([r.iteration, repr(r.best_fitness_km), repr(r.mean_fitness_km), repr(r.best_so_far_km)])

    @classmethod
    def read_csv(cls, path: str | Path) -> "GaHistory":
        rows = []
        with open(path, newline="", encoding="utf-8") as fh:
            for rec in csv.DictReader(fh):
                rows.append(HistoryRow(
                    int(rec["iteration"]), float(rec["best_fitness_km"]),
                    float(rec["mean_fitness_km"]), float(rec["best_so_far_km"]), (),
                ))
        return cls(rows)


# --------------------------------------------------------------------------
# operators
# --------------------------------------------------------------------------

def init_population(n_candidates: int, cfg: GaConfig, rng: np.random.Generator) -> Population:
    """``cfg.pop_size`` distinct random plans of ``cfg.k`` stations each."""
    cfg.check(n_candidates)
    total = math.comb(n_candidates, cfg.k)
    seen: set[tuple[int, ...]] = set()
    plans: list[StationPlan] = []
    if cfg.pop_size * 2 > total:
        # dense request: sample without replacement from the full enumeration
        every = list(itertools.combinations(range(n_candidates), cfg.k))
        for i in rng.permutation(total)[: cfg.pop_size].tolist():
            plans.append(StationPlan(every[i]))
        return Population(plans)
    while len(plans) < cfg.pop_size:
        genes = tuple(sorted(rng.choice(n_candidates, size=cfg.k, replace=False).tolist()))
        if genes not in seen:
            seen.add(genes)
            plans.append(StationPlan(genes))
    return Population(plans)


def selection_weights(fitnesses: Sequence[float], floor: float = 0.01) -> np.ndarray:
    """Roulette probabilities: ``(f_max - f_i) + floor * (f_max - f_min)``, normalized."""
    f = np.asarray(fitnesses, dtype=float)
    f_max, f_min = f.max(), f.min()
    if f_max == f_min:
        return np.full(len(f), 1.0 / len(f))
    w = (f_max - f) + floor * (f_max - f_min)
    return w / w.sum()


def roulette_select(pop: Population, rng: np.random.Generator, floor: float = 0.01) -> Population:
    p = selection_weights(pop.fitnesses, floor)
    picks = rng.choice(len(pop), size=len(pop), replace=True, p=p)
    return Population(
        [pop.individuals[i] for i in picks.tolist()],
        [pop.fitnesses[i] for i in picks.tolist()],
    )


def crossover(a: StationPlan, b: StationPlan, rng: np.random.Generator) -> tuple[StationPlan, StationPlan]:
    """Keep the shared genes, shuffle the rest and deal half to each child."""
    if a.k != b.k:
        raise ValueError(f"parents differ in size ({a.k} vs {b.k})")
    sa, sb = set(a.stations), set(b.stations)
    mutual = sa & sb
    exclusive = sorted(sa ^ sb)
    shuffled = [exclusive[i] for i in rng.permutation(len(exclusive))] if exclusive else []
    half = len(shuffled) // 2
    return (
        StationPlan(tuple(sorted(mutual | set(shuffled[:half])))),
        StationPlan(tuple(sorted(mutual | set(shuffled[half:])))),
    )


def mutate(plan: StationPlan, n_candidates: int, rng: np.random.Generator) -> StationPlan:
    """Replace one random gene by a random node outside the chromosome."""
    if plan.k >= n_candidates:
        raise NoReplacementCandidateError("every candidate is already in the plan")
    genes = set(plan.stations)
    outside = [v for v in range(n_candidates) if v not in genes]
    drop = plan.stations[int(rng.integers(plan.k))]
    add = outside[int(rng.integers(len(outside)))]
    genes.discard(drop)
    genes.add(add)
    return StationPlan(tuple(sorted(genes)))


# --------------------------------------------------------------------------
# main loop
# --------------------------------------------------------------------------

_worker_eval: Evaluator | None = None


def _init_worker(evaluator: Evaluator) -> None:
    global _worker_eval
    _worker_eval = evaluator


def _eval_in_worker(plan: StationPlan) -> float:
    assert _worker_eval is not None
    return _worker_eval(plan)


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise GaConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


class _FitnessCache:
    def __init__(self, evaluator: Evaluator, workers: int):
        self.evaluator = evaluator
        self.memo: dict[tuple[int, ...], float] = {}
        self.pool = (
            ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(evaluator,))
            if workers > 1 else None
        )

    def __call__(self, plans: Sequence[StationPlan]) -> list[float]:
        todo = list(dict.fromkeys(p.stations for p in plans if p.stations not in self.memo))
        if todo:
            if self.pool is None:
                values = [self.evaluator(StationPlan(s)) for s in todo]
            else:
                values = list(self.pool.map(_eval_in_worker, [StationPlan(s) for s in todo], chunksize=16))
            self.memo.update(zip(todo, values))
        return [self.memo[p.stations] for p in plans]

    def close(self) -> None:
        if self.pool is not None:
            self.pool.shutdown()


def run_ga(
    evaluator: Evaluator,
    cfg: GaConfig,
    rng: np.random.Generator | None = None,
    *,
    n_candidates: int,
    verbose: bool = False,
    workers: int | None = None,
) -> tuple[StationPlan, GaHistory]:
    """Run the GA; returns the best plan ever evaluated and the history.

    History row 0 is the initial population; rows 1..max_iter follow each
    select/crossover/mutate step.
    """
    cfg.check(n_candidates)
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    fitness_of = _FitnessCache(evaluator, workers if workers is not None else worker_count())
    history = GaHistory()
    best_plan: StationPlan | None = None
    best_fit = math.inf
    try:
        pop = init_population(n_candidates, cfg, rng)
        for it in range(cfg.max_iter + 1):
            if it > 0:
                pop = roulette_select(pop, rng, cfg.selection_floor)
                inds = pop.individuals
                order = rng.permutation(len(inds)).tolist()
                for a, b in zip(order[0::2], order[1::2]):
                    if rng.random() < cfg.p_cross:
                        inds[a], inds[b] = crossover(inds[a], inds[b], rng)
                for i in range(len(inds)):
                    if rng.random() < cfg.p_mut:
                        inds[i] = mutate(inds[i], n_candidates, rng)
            pop.fitnesses = fitness_of(pop.individuals)
            gen_best = int(np.argmin(pop.fitnesses))
            if pop.fitnesses[gen_best] < best_fit:
                best_fit = pop.fitnesses[gen_best]
                best_plan = pop.individuals[gen_best]
            history.rows.append(HistoryRow(
                it, pop.fitnesses[gen_best], math.fsum(pop.fitnesses) / len(pop),
                best_fit, best_plan.stations,
            ))
            if verbose:
                print(
                    f"iter {it:4d}  best {pop.fitnesses[gen_best]:.3f}  "
                    f"mean {history.rows[-1].mean_fitness_km:.3f}  best-so-far {best_fit:.3f} km",
                    file=sys.stderr,
                )
    finally:
        fitness_of.close()
    assert best_plan is not None
    return best_plan, history
