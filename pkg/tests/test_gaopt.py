import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from evdetour.detoursim import StationPlan
from evdetour.errors import GaConfigError, NoReplacementCandidateError
from evdetour.gaopt import (
    GaConfig,
    GaHistory,
    Population,
    crossover,
    init_population,
    mutate,
    roulette_select,
    run_ga,
    selection_weights,
    worker_count,
)


class ShuffleStub:
    """Stands in for a Generator whose permutation yields a fixed order."""

    def __init__(self, order):
        self.order = order

    def permutation(self, n):
        assert n == len(self.order)
        return np.array(self.order)


def toy_fitness(plan: StationPlan) -> float:
    # optimum is the plan {0, 1, ..., k-1}
    return float(sum(plan.stations))


# initial population ------------------------------------------------------

@pytest.mark.parametrize("n,k,pop", [(15, 15, 1), (4, 2, 6), (100, 15, 1500), (10, 3, 100)])
def test_init_population_distinct(n, k, pop):
    p = init_population(n, GaConfig(pop_size=pop, k=k), np.random.default_rng(0))
    keys = [ind.stations for ind in p.individuals]
    assert len(keys) == pop == len(set(keys))
    assert all(len(s) == k and all(0 <= v < n for v in s) for s in keys)
    if (n, k, pop) == (4, 2, 6):
        assert set(keys) == {(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)}


def test_init_population_search_space_size():
    assert math.comb(100, 15) == pytest.approx(2.53e17, rel=1e-2)


def test_config_checks():
    with pytest.raises(GaConfigError):
        GaConfig(pop_size=7, k=2).check(4)
    with pytest.raises(GaConfigError):
        GaConfig(k=0).check(10)
    with pytest.raises(GaConfigError):
        GaConfig(k=11).check(10)
    with pytest.raises(GaConfigError):
        GaConfig(pop_size=5, k=2, p_cross=1.5).check(10)
    with pytest.raises(GaConfigError):
        GaConfig(pop_size=5, k=2, max_iter=-1).check(10)


# selection ------------------------------------------------------------

def test_selection_weights_two():
    p = selection_weights([10.0, 30.0])
    assert p == pytest.approx([20.2 / 20.4, 0.2 / 20.4])
    assert p[0] == pytest.approx(0.9901, abs=1e-4) and p[1] == pytest.approx(0.0099, abs=1e-4)


def test_selection_weights_uniform_when_equal():
    assert selection_weights([5.0, 5.0, 5.0]).tolist() == pytest.approx([1 / 3] * 3)
    assert selection_weights([0.0]).tolist() == [1.0]


@given(st.lists(st.floats(0, 1e5), min_size=2, max_size=50))
def test_selection_monotone(fits):
    p = selection_weights(fits)
    assert p.sum() == pytest.approx(1.0)
    assert (p > 0).all()
    for i in range(len(fits)):
        for j in range(len(fits)):
            if fits[i] < fits[j]:
                assert p[i] >= p[j]


def test_roulette_keeps_size_and_members():
    pop = Population([StationPlan((0,)), StationPlan((1,)), StationPlan((2,))], [1.0, 2.0, 3.0])
    out = roulette_select(pop, np.random.default_rng(0))
    assert len(out) == 3
    assert all(ind in pop.individuals for ind in out.individuals)
    one = Population([StationPlan((4,))], [7.0])
    assert roulette_select(one, np.random.default_rng(0)).individuals == [StationPlan((4,))]


def test_roulette_frequencies():
    pop = Population([StationPlan((0,)), StationPlan((1,))], [10.0, 30.0])
    rng = np.random.default_rng(1)
    picks = [roulette_select(pop, rng).individuals for _ in range(2000)]
    share = sum(ind.stations == (0,) for grp in picks for ind in grp) / 4000
    assert share == pytest.approx(0.9901, abs=0.01)


# crossover and mutation -----------------------------------------------------

def test_crossover_example():
    a, b = StationPlan((1, 2, 3)), StationPlan((1, 4, 5))
    # exclusive genes sorted: [2, 3, 4, 5]; the stub order gives shuffle (4, 2, 5, 3)
    c1, c2 = crossover(a, b, ShuffleStub([2, 0, 3, 1]))
    assert c1.stations == (1, 2, 4)
    assert c2.stations == (1, 3, 5)


def test_crossover_identical_parents():
    a = StationPlan((0, 3, 7))
    assert crossover(a, a, np.random.default_rng(0)) == (a, a)


def test_crossover_size_mismatch():
    with pytest.raises(ValueError):
        crossover(StationPlan((1, 2)), StationPlan((1, 2, 3)), np.random.default_rng(0))


@settings(max_examples=300)
@given(st.integers(2, 30), st.data())
def test_operator_invariants(n, data):
    k = data.draw(st.integers(1, n - 1))
    genes = st.lists(st.integers(0, n - 1), min_size=k, max_size=k, unique=True)
    a = StationPlan.of(data.draw(genes))
    b = StationPlan.of(data.draw(genes))
    rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
    c1, c2 = crossover(a, b, rng)
    sa, sb = set(a.stations), set(b.stations)
    for c in (c1, c2):
        assert c.k == k and set(c.stations) <= sa | sb and sa & sb <= set(c.stations)
    assert sorted(c1.stations + c2.stations) == sorted(a.stations + b.stations)
    m = mutate(a, n, rng)
    assert m.k == k and len(set(m.stations) ^ sa) == 2


def test_mutate_full_plan_raises():
    with pytest.raises(NoReplacementCandidateError):
        mutate(StationPlan((0, 1, 2)), 3, np.random.default_rng(0))


# main loop --------------------------------------------------------------

def test_max_iter_zero():
    plan, hist = run_ga(toy_fitness, GaConfig(pop_size=10, k=3, max_iter=0), n_candidates=10, workers=1)
    assert len(hist) == 1
    assert hist.rows[0].best_so_far_km == toy_fitness(plan)


def test_run_ga_finds_toy_optimum_and_history_is_monotone():
    cfg = GaConfig(pop_size=40, k=3, max_iter=40, seed=3)
    plan, hist = run_ga(toy_fitness, cfg, n_candidates=12, workers=1)
    assert plan.stations == (0, 1, 2)
    bsf = hist.best_so_far()
    assert len(hist) == 41
    assert all(b <= a for a, b in zip(bsf, bsf[1:]))
    assert all(r.best_so_far_km <= r.best_fitness_km <= r.mean_fitness_km for r in hist.rows)


def test_run_ga_deterministic():
    cfg = GaConfig(pop_size=20, k=4, max_iter=10, seed=8)
    a = run_ga(toy_fitness, cfg, n_candidates=15, workers=1)
    b = run_ga(toy_fitness, cfg, n_candidates=15, workers=1)
    assert a[0] == b[0] and a[1].rows == b[1].rows


def test_run_ga_population_of_one():
    plan, hist = run_ga(toy_fitness, GaConfig(pop_size=1, k=2, max_iter=5), n_candidates=6, workers=1)
    assert len(hist) == 6 and plan.k == 2


def test_parallel_matches_serial():
    cfg = GaConfig(pop_size=16, k=3, max_iter=3, seed=1)
    serial = run_ga(toy_fitness, cfg, n_candidates=10, workers=1)
    parallel = run_ga(toy_fitness, cfg, n_candidates=10, workers=2)
    assert serial[0] == parallel[0] and serial[1].rows == parallel[1].rows


def test_worker_env(monkeypatch):
    monkeypatch.setenv("EVDETOUR_WORKERS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("EVDETOUR_WORKERS", "lots")
    with pytest.raises(GaConfigError):
        worker_count()


def test_history_csv_roundtrip(tmp_path):
    _, hist = run_ga(toy_fitness, GaConfig(pop_size=10, k=3, max_iter=4), n_candidates=10, workers=1)
    p = tmp_path / "h.csv"
    hist.write_csv(p)
    back = GaHistory.read_csv(p)
    assert back.best_so_far() == hist.best_so_far()
    assert p.read_text().splitlines()[0] == "iteration,best_fitness_km,mean_fitness_km,best_so_far_km"
