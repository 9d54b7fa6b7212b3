from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from fracident.pso import FitnessError, SwarmConfig, inertia_at, optimize


def sphere(x):
    return float(np.dot(x, x))


def sphere_config(seed, particles=40, iterations=150):
    return SwarmConfig(
        position_bounds=[[-1, 1], [-1, 1]],
        velocity_bounds=[[-0.5, 0.5], [-0.5, 0.5]],
        particle_count=particles,
        iterations=iterations,
        seed=seed,
    )


@pytest.mark.parametrize(
    "iteration,total,expected",
    [(0, 150, 0.9), (149, 150, 0.4), (75, 151, 0.65), (0, 1, 0.9)],
)
def test_inertia_schedule(iteration, total, expected):
    assert inertia_at(iteration, total, 0.9, 0.4) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("iteration,total", [(-1, 10), (10, 10), (0, 0)])
def test_inertia_rejects_out_of_range(iteration, total):
    with pytest.raises(ValueError):
        inertia_at(iteration, total)


def test_defaults():
    cfg = sphere_config(0)
    assert (cfg.c1, cfg.c2, cfg.inertia_start, cfg.inertia_end) == (1.4, 1.4, 0.9, 0.4)


@pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
def test_sphere_minimum(seed):
    result = optimize(sphere, sphere_config(seed))
    assert result.best_fitness <= 1e-6
    assert result.history.shape == (150,)


def test_one_dimensional_parabola():
    cfg = SwarmConfig([[0, 2]], [[-0.2, 0.2]], particle_count=40, iterations=150, seed=9)
    result = optimize(lambda x: float((x[0] - 0.5) ** 2), cfg)
    assert abs(result.best_position[0] - 0.5) <= 1e-4


def test_deterministic():
    a = optimize(sphere, sphere_config(123))
    b = optimize(sphere, sphere_config(123))
    assert np.array_equal(a.best_position, b.best_position)
    assert np.array_equal(a.history, b.history)
    c = optimize(sphere, sphere_config(124))
    assert not np.array_equal(a.history, c.history)


def test_executor_does_not_change_result():
    a = optimize(sphere, sphere_config(5))
    with ThreadPoolExecutor(4) as pool:
        b = optimize(sphere, sphere_config(5), executor=pool)
    assert np.array_equal(a.best_position, b.best_position)
    assert np.array_equal(a.history, b.history)


class Recorder:
    def __init__(self, fitness):
        self.fitness = fitness
        self.states = []

    def __call__(self, state):
        self.states.append(
            (
                state.iteration,
                state.positions.copy(),
                state.fitness.copy(),
                state.personal_best.copy(),
                state.personal_best_fitness.copy(),
                state.global_best.copy(),
                state.global_best_fitness,
            )
        )


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_swarm_invariants(seed):
    cfg = sphere_config(seed, particles=15, iterations=60)
    # shifted optimum near a corner so clamping happens
    target = np.array([0.97, -0.99])

    def fitness(x):
        return float(np.sum((x - target) ** 2))

    rec = Recorder(fitness)
    result = optimize(fitness, cfg, callback=rec)
    lo, hi = cfg.position_bounds[:, 0], cfg.position_bounds[:, 1]
    prev_pbest_f = None
    for it, x, f, p, pf, g, gf in rec.states:
        assert np.all(x >= lo) and np.all(x <= hi)
        assert gf == pf.min()
        assert fitness(g) == gf
        assert np.all(pf <= f)
        for i in range(cfg.particle_count):
            assert fitness(p[i]) == pf[i]
        if prev_pbest_f is not None:
            assert np.all(pf <= prev_pbest_f)
        prev_pbest_f = pf
    assert np.all(np.diff(result.history) <= 0)
    assert result.history[-1] == result.best_fitness
    assert len(rec.states) == cfg.iterations + 1


def test_history_monotone_on_rugged_function():
    def rastrigin(x):
        return float(10 * x.size + np.sum(x * x - 10 * np.cos(2 * np.pi * x)))

    cfg = SwarmConfig([[-5, 5]] * 3, [[-1, 1]] * 3, particle_count=20, iterations=100, seed=4)
    result = optimize(rastrigin, cfg)
    assert np.all(np.diff(result.history) <= 0)


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_non_finite_fitness_is_an_error(bad):
    calls = {"n": 0}

    def fitness(x):
        calls["n"] += 1
        return bad if calls["n"] == 30 else sphere(x)

    with pytest.raises(FitnessError) as info:
        optimize(fitness, sphere_config(0, particles=10, iterations=5))
    assert info.value.position is not None


def test_arithmetic_failure_becomes_fitness_error():
    def fitness(x):
        raise ZeroDivisionError("boom")

    with pytest.raises(FitnessError):
        optimize(fitness, sphere_config(0, particles=3, iterations=2))


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(position_bounds=[[0, 1]], velocity_bounds=[[0, 1], [0, 1]]),
        dict(position_bounds=[[1, 0]], velocity_bounds=[[0, 1]]),
        dict(position_bounds=[], velocity_bounds=[]),
        dict(position_bounds=[[0, 1]], velocity_bounds=[[0, 1]], particle_count=0),
        dict(position_bounds=[[0, 1]], velocity_bounds=[[0, 1]], iterations=0),
        dict(position_bounds=[[0, 1]], velocity_bounds=[[0, 1]], seed=-1),
        dict(position_bounds=[[0, np.inf]], velocity_bounds=[[0, 1]]),
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        SwarmConfig(**kwargs)


def test_single_iteration_runs():
    result = optimize(sphere, sphere_config(0, particles=5, iterations=1))
    assert result.history.shape == (1,)
    assert result.evaluations == 10
