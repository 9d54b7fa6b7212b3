"""Acceptance criteria, one test each, at the stated tolerances.

Every swarm-based criterion uses master seed 0, the command-line default.
Run ``i`` (0..4) draws its swarm seed from ``derive_seed(0, "pso", i)`` and,
when noise is added, its noise seed from ``derive_seed(0, "noise", i)``; the
resulting values are listed in ``PSO_SEEDS`` and ``NOISE_SEEDS``. The concentrated search uses
``derive_seed(0, f"refine/{level}", j)`` for nominal ``j`` of each level.

Each test appends one PASS/FAIL line, printed in the terminal summary.
"""

import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import ACCEPTANCE_LINES
from fracident.fracsim import FractionalModel, simulate
from fracident.grunwald import gl_coefficients, gl_differint
from fracident.identify import (
    TRUE_MODEL,
    NoiseSpec,
    five_parameter_scenario,
    four_parameter_scenario,
    identify,
    make_fitness,
)
from fracident.pso import SwarmConfig, optimize
from fracident.refine import concentrated_search
from fracident.seeds import derive_seed
from fracident.signals import SampledSignal
from fracident.verify import rank_models, reconstruct_coefficients
from test_fracsim import SECOND_ORDER, second_order_step
from test_grunwald import ORACLE_ORDERS, gamma_weights

MASTER_SEED = 0
RUNS = 5
PSO_SEEDS = [10127541647387228409, 3524111105208869562, 5469157913674390883, 6082053975738656915, 13593259001664238150]
NOISE_SEEDS = [14684542090635393566, 5842992109003939167, 6039930515912887730, 2319966769710451645, 5510484996173832481]


def record(number, title, ok, detail):
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {number}. {title}: {detail}")
    assert ok, detail


def max_percent_error(model, truth, names):
    return max(abs(getattr(model, n) - getattr(truth, n)) / abs(getattr(truth, n)) * 100 for n in names)


def test_documented_seeds():
    # frozen so that a change to the derivation is noticed
    assert [derive_seed(MASTER_SEED, "pso", i) for i in range(RUNS)] == PSO_SEEDS
    assert [derive_seed(MASTER_SEED, "noise", i) for i in range(RUNS)] == NOISE_SEEDS


def test_criterion_1_gl_coefficient_oracle():
    start = time.perf_counter()
    worst = 0.0
    for order in ORACLE_ORDERS:
        got = gl_coefficients(order, 201).values
        want = gamma_weights(order, 201)
        nz = want != 0
        worst = max(worst, float(np.max(np.abs(got[nz] - want[nz]) / np.abs(want[nz]))))
        # integer orders: exact zeros past the order
        worst = max(worst, float(np.max(np.abs(got[~nz]), initial=0.0)))
    elapsed = time.perf_counter() - start
    record(1, "GL coefficients vs gamma oracle", worst <= 1e-10, f"max rel err {worst:.2e} ({elapsed:.2f} s)")


def test_criterion_2_integer_order_simulator():
    errors = {}
    for h in (0.02, 0.01, 0.005, 0.002, 0.001):
        out = simulate(SECOND_ORDER, "step", h, 10.0)
        errors[h] = float(np.max(np.abs(out.samples - second_order_step(out.times))))
    values = list(errors.values())
    monotone = all(a > b for a, b in zip(values, values[1:]))
    ok = errors[0.001] <= 1e-2 and monotone
    detail = "max abs err " + ", ".join(f"h={h}: {e:.2e}" for h, e in errors.items())
    record(2, "integer-order step response", ok, detail)


def test_criterion_3_four_parameters_noiseless(observations):
    scenario = four_parameter_scenario()
    swarm = scenario.swarm_config(40, 150, seed=MASTER_SEED)
    report = identify(observations, scenario, swarm, runs=RUNS, truth=TRUE_MODEL)
    err = max_percent_error(report.best_model, TRUE_MODEL, scenario.free)
    ok = report.best_fitness <= 1e-6 and err <= 0.1
    record(3, "4 free parameters, noiseless", ok, f"best F {report.best_fitness:.2e}, max error {err:.4f} %")


def test_criterion_4_five_parameters_noiseless(observations):
    scenario = five_parameter_scenario()
    swarm = scenario.swarm_config(50, 200, seed=MASTER_SEED)
    report = identify(observations, scenario, swarm, runs=RUNS, truth=TRUE_MODEL)
    err = max_percent_error(report.best_model, TRUE_MODEL, scenario.free)
    ok = report.best_fitness <= 1e-3 and err <= 2.0
    record(4, "5 free parameters, noiseless", ok, f"best F {report.best_fitness:.2e}, max error {err:.3f} %")


def test_criterion_5_five_parameters_noisy(observations):
    scenario = five_parameter_scenario()
    swarm = scenario.swarm_config(50, 200, seed=MASTER_SEED)
    report = identify(
        observations, scenario, swarm, runs=RUNS, noise=NoiseSpec(0.05, MASTER_SEED), truth=TRUE_MODEL
    )
    assert report.pso_seeds == PSO_SEEDS and report.noise_seeds == NOISE_SEEDS
    err = max_percent_error(report.best_model, TRUE_MODEL, scenario.free)
    f = report.best_fitness
    ok = err <= 5.0 and 0.10 <= f <= 0.25
    worst = max(scenario.free, key=lambda n: abs(getattr(report.best_model, n) / getattr(TRUE_MODEL, n) - 1))
    record(5, "5 free parameters, noise 0.05", ok, f"best F {f:.4f}, max error {err:.2f} % ({worst})")


def test_criterion_6_reconstruction(fine_response):
    true_orders = reconstruct_coefficients(fine_response, 2.2, 0.9)
    err_true = max(abs(v / w - 1) * 100 for v, w in zip(true_orders, (0.8, 0.5, 1.0)))
    first = reconstruct_coefficients(fine_response, 2.2015, 0.9029)
    err_first = max(abs(v / w - 1) * 100 for v, w in zip(first, (0.8021, 0.4994, 1.0006)))
    ok = err_true <= 1.0 and err_first <= 2.0
    detail = (
        f"true orders -> ({', '.join(f'{v:.4f}' for v in true_orders)}) {err_true:.3f} %; "
        f"candidate 1 -> ({', '.join(f'{v:.4f}' for v in first)}) {err_first:.3f} %"
    )
    record(6, "coefficient reconstruction", ok, detail)


def test_criterion_7_ranking(observations):
    candidates = [
        FractionalModel(0.7989, 2.2015, 0.5014, 0.9029, 1.0004),
        FractionalModel(0.8047, 2.1955, 0.4969, 0.8878, 0.9981),
        FractionalModel(0.7474, 2.2558, 0.5452, 1.0175, 1.0156),
    ]
    ranked = rank_models(candidates, observations)
    order = [r.index for r in ranked]
    detail = "order " + str([i + 1 for i in order]) + ", F " + ", ".join(f"{r.fitness:.3e}" for r in ranked)
    record(7, "candidate ranking", order == [0, 1, 2], detail)


def test_criterion_8_concentrated_search(observations):
    start = time.perf_counter()
    result = concentrated_search(
        observations,
        five_parameter_scenario(),
        "beta",
        (0.7, 1.1),
        branching=4,
        width_tolerance=0.002,
        seed=MASTER_SEED,
    )
    first = result.levels[0].best.interval
    beta = result.model.beta
    ok = (
        first == pytest.approx((0.8, 0.9), abs=1e-12)
        and abs(beta - 0.9) <= 0.005
        and result.fitness <= 1e-5
    )
    elapsed = time.perf_counter() - start
    detail = (
        f"level 1 [{first[0]:.3f}, {first[1]:.3f}], {len(result.levels)} levels, "
        f"beta {beta:.5f}, F {result.fitness:.2e} ({elapsed:.0f} s)"
    )
    record(8, "concentrated search on beta", ok, detail)


def _property_checks():
    failures = []

    def check(name, prop):
        try:
            prop()
        except Exception as exc:  # noqa: BLE001 - any failure is reported, not raised
            failures.append(f"{name}: {type(exc).__name__}")

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**64 - 1))
    def swarm_properties(seed):
        cfg = SwarmConfig([[-1, 1]] * 2, [[-0.5, 0.5]] * 2, particle_count=15, iterations=40, seed=seed)
        lo, hi = cfg.position_bounds[:, 0], cfg.position_bounds[:, 1]
        inside = []

        def callback(state):
            inside.append(bool(np.all(state.positions >= lo) and np.all(state.positions <= hi)))

        sphere = lambda x: float(np.dot(x, x))  # noqa: E731
        a = optimize(sphere, cfg, callback=callback)
        b = optimize(sphere, cfg)
        assert np.all(np.diff(a.history) <= 0)
        assert all(inside)
        assert np.array_equal(a.history, b.history) and np.array_equal(a.best_position, b.best_position)

    obs = simulate(TRUE_MODEL, "step", 0.05, 10.0)
    fitness = make_fitness(obs, five_parameter_scenario())

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0, 2), st.floats(2.0, 2.4), st.floats(0, 2), st.floats(0.7, 1.1), st.floats(0.01, 2))
    def fitness_properties(a1, alpha, a2, beta, a3):
        position = np.array([a1, alpha, a2, beta, a3])
        f = fitness(position)
        response = simulate(FractionalModel(a1, alpha, a2, beta, a3), "step", 0.05, 10.0).samples
        assert f >= 0
        assert (f == 0) == np.array_equal(response, obs.samples)

    @settings(max_examples=30, deadline=None)
    @given(
        st.lists(st.floats(-10, 10), min_size=2, max_size=60),
        st.floats(-5, 5),
        st.floats(-2.5, 2.5),
        st.integers(0, 2**32 - 1),
    )
    def linearity(values, a, order, seed):
        f = np.array(values)
        g = np.random.default_rng(seed).normal(size=f.size)
        h = 0.05

        def d(x):
            return gl_differint(SampledSignal(0, h, x), order, h * f.size).samples

        def magnitude(x):
            return np.convolve(np.abs(x), np.abs(gl_coefficients(order, x.size).values))[: x.size] * h**-order

        scale = abs(a) * magnitude(f) + magnitude(g)
        assert np.all(np.abs(d(a * f + g) - (a * d(f) + d(g))) <= 1e-10 * scale + 1e-300)

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(0.1, 10), min_size=3, max_size=150), st.sampled_from([0.001, 0.01, 0.05]))
    def near_inverse(values, h):
        f = np.array(values)
        full = 2 * h * f.size
        back = gl_differint(gl_differint(SampledSignal(0, h, f), -1.0, full), 1.0, full).samples
        np.testing.assert_allclose(back[1:], f[1:], rtol=1e-8)

    check("swarm monotone/in-bounds/deterministic", swarm_properties)
    check("fitness nonnegative and zero iff equal", fitness_properties)
    check("differint linearity", linearity)
    check("differint near-inverse", near_inverse)
    return failures


def test_criterion_9_property_suites():
    failures = _property_checks()
    detail = "all four property groups hold" if not failures else "; ".join(failures)
    record(9, "property suites", not failures, detail)
