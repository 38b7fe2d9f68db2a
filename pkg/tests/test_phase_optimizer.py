import io

import numpy as np
import pytest

from riscap import channel_model as cm
from riscap import phase_optimizer as po
from riscap.capacity_bounds import CapacityQuery, upper_bound


@pytest.fixture
def setup(rng):
    system = cm.SystemConfig(n_tx=2, n_rx=2, m_h=2, m_v=2)
    return system, cm.sample_path_set(system, rng)


def test_params_validation():
    for bad in (dict(population=0), dict(elitism=5, population=5), dict(tournament_size=9, population=4),
                dict(crossover_rate=1.5), dict(mutation_sigma=0.0)):
        with pytest.raises(ValueError):
            po.GaParams(**bad)


def test_objective_is_upper_bound(setup, rng):
    system, paths = setup
    theta = cm.PhaseShifts.wrapped(rng.uniform(-3, 3, 4))
    stats = cm.effective_stats(system, paths, theta)
    assert po.objective(theta, system, paths, 10.0) == pytest.approx(
        upper_bound(CapacityQuery(10.0, stats)).value
    )


def test_ga_is_deterministic_and_improves(setup, rng):
    system, paths = setup
    ga = po.GaParams(population=20, generations=30, seed=4)
    a = po.ga_optimize(system, paths, 10.0, ga)
    b = po.ga_optimize(system, paths, 10.0, po.GaParams(population=20, generations=30, seed=4, workers=3))
    assert np.array_equal(a.best_phases.theta, b.best_phases.theta) and a.history == b.history
    best = [h[0] for h in a.history]
    assert all(y >= x for x, y in zip(best, best[1:]))
    assert len(a.history) == 30
    zero = po.objective(po.baseline_phases("zero", 4), system, paths, 10.0)
    random_best = max(po.objective(po.baseline_phases("random", 4, rng), system, paths, 10.0) for _ in range(20))
    assert a.best_objective >= max(zero, random_best)
    assert po.objective(a.best_phases, system, paths, 10.0) == pytest.approx(a.best_objective)


def test_single_element_matches_grid_search(rng):
    system = cm.SystemConfig(n_tx=1, n_rx=1, m_h=1, m_v=1, n_paths_h=1)
    paths = cm.sample_path_set(system, rng)
    fn = po.PhaseObjective(system, paths, 10.0)
    grid = max(fn([t]) for t in np.linspace(-np.pi, np.pi, 4001)[1:])
    trace = po.ga_optimize(system, paths, 10.0, po.GaParams(population=20, generations=60), fitness=fn)
    assert trace.best_objective == pytest.approx(grid, abs=1e-3)


def test_failing_individuals_score_minus_inf(setup):
    system, paths = setup

    def fitness(theta):
        if theta[0] > 0:
            raise ValueError("boom")
        return -abs(theta[0])

    trace = po.ga_optimize(system, paths, 1.0, po.GaParams(population=10, generations=5), fitness=fitness)
    assert np.isfinite(trace.best_objective)


def test_trace_csv(setup):
    system, paths = setup
    trace = po.ga_optimize(system, paths, 1.0, po.GaParams(population=6, generations=3))
    buf = io.StringIO()
    trace.write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "generation,best,mean" and len(lines) == 4


def test_baselines(rng):
    assert np.all(po.baseline_phases("zero", 3).theta == 0)
    theta = po.baseline_phases("random", 100, rng).theta
    assert theta.min() > -np.pi and theta.max() <= np.pi
    with pytest.raises(ValueError):
        po.baseline_phases("other", 3)
