"""Cross-check of estimated orders by reconstructing the coefficients.

Given orders ``(alpha, beta)`` and a sampled unit-step response ``c``, the
relation ``u = a1 D^alpha c + a2 D^beta c + a3 c`` and its first and second
integrals (ramp and parabola inputs) give three linear equations in
``(a1, a2, a3)``. Each equation is evaluated at one instant with a
Grünwald-Letnikov memory window.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .fracsim import FractionalModel, SimulationError, downsample, simulate
from .grunwald import gl_differint_at, memory_taps
from .identify import five_parameter_scenario, make_fitness
from .pso import FitnessError
from .signals import SampledSignal

__all__ = [
    "CONDITION_LIMIT",
    "EquationRow",
    "SingularSystemError",
    "build_equation",
    "build_system",
    "solve_linear",
    "reconstruct_coefficients",
    "reconstruct_least_squares",
    "RankedModel",
    "rank_models",
]

#: Above this 2-norm condition number a float64 solve has no trustworthy digits
#: at the 1 % level.
CONDITION_LIMIT = 1e12

LEVEL_INPUTS = ("step", "ramp", "parabola")


class SingularSystemError(ArithmeticError):
    """The equation rows do not determine the coefficients."""

    def __init__(self, message, rows=(), condition=math.inf):
        super().__init__(message)
        self.rows = tuple(rows)
        self.condition = condition


@dataclass(frozen=True)
class EquationRow:
    """``a1 * p + a2 * q + a3 * r = s`` at integration level ``level``."""

    p: float
    q: float
    r: float
    s: float
    level: int

    def residual(self, a1, a2, a3) -> float:
        return a1 * self.p + a2 * self.q + a3 * self.r - self.s

    def to_dict(self) -> dict:
        return asdict(self) | {"input": LEVEL_INPUTS[self.level]}


def level_input(level: int, t: float) -> float:
    """Value at ``t`` of the unit step, unit ramp or parabola ``t^2 / 2``."""
    if level == 0:
        return 1.0
    if level == 1:
        return float(t)
    if level == 2:
        return 0.5 * t * t
    raise ValueError(f"level must be 0, 1 or 2, got {level!r}")


def build_equation(
    c: SampledSignal, alpha: float, beta: float, level: int, eval_time: float = 10.0, memory: float = 10.0
) -> EquationRow:
    """Row of the ``level``-times integrated model relation at ``eval_time``.

    ``eval_time`` must leave a full memory window of history behind it.
    """
    if level not in (0, 1, 2):
        raise ValueError(f"level must be 0, 1 or 2, got {level!r}")
    if memory < c.period * (1 - 1e-12):
        raise ValueError(f"memory {memory!r} is shorter than the sampling period {c.period!r}")
    k = c.index_of(eval_time)
    if k < memory_taps(memory, c.period):
        raise ValueError(
            f"eval_time {eval_time!r} leaves only {c.times[k] - c.start_time!r} s of history, "
            f"the memory window needs {memory!r} s"
        )
    p = gl_differint_at(c, alpha - level, memory, k)
    q = gl_differint_at(c, beta - level, memory, k)
    r = gl_differint_at(c, -level, memory, k)
    return EquationRow(p, q, r, level_input(level, eval_time - c.start_time), level)


def build_system(c, alpha, beta, eval_time=10.0, memory=10.0) -> list:
    return [build_equation(c, alpha, beta, level, eval_time, memory) for level in range(3)]


def solve_linear(a, b, pivot_tol: float = 0.0) -> np.ndarray:
    """Solve ``a x = b`` by Gaussian elimination with partial pivoting.

    Raises :class:`SingularSystemError` when a pivot is not larger than
    ``pivot_tol`` times the largest entry of ``a``.
    """
    a = np.array(a, dtype=np.float64)
    b = np.array(b, dtype=np.float64)
    n = b.size
    if a.shape != (n, n):
        raise ValueError(f"expected a {n}x{n} matrix, got shape {a.shape}")
    scale = np.max(np.abs(a)) if a.size else 0.0
    order = list(range(n))
    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        if not abs(a[p, k]) > pivot_tol * scale or a[p, k] == 0.0:
            raise SingularSystemError(f"zero pivot in column {k}", rows=order[k:])
        if p != k:
            a[[k, p]] = a[[p, k]]
            b[[k, p]] = b[[p, k]]
            order[k], order[p] = order[p], order[k]
        for i in range(k + 1, n):
            factor = a[i, k] / a[k, k]
            a[i, k:] -= factor * a[k, k:]
            b[i] -= factor * b[k]
    x = np.empty(n)
    for k in range(n - 1, -1, -1):
        x[k] = (b[k] - np.dot(a[k, k + 1 :], x[k + 1 :])) / a[k, k]
    return x


def _dependent_rows(matrix: np.ndarray) -> list:
    """Levels of rows that are (numerically) combinations of other rows."""
    u, s, _ = np.linalg.svd(matrix)
    if s[0] == 0:
        return list(range(matrix.shape[0]))
    # the left singular vector of the smallest singular value combines rows to ~0
    weights = np.abs(u[:, -1])
    return [i for i in range(matrix.shape[0]) if weights[i] > 1e-6 * weights.max()]


def _condition(matrix: np.ndarray) -> float:
    s = np.linalg.svd(matrix, compute_uv=False)
    if s[0] == 0 or s[-1] == 0:
        return math.inf
    return float(s[0] / s[-1])


def reconstruct_coefficients(
    c: SampledSignal,
    alpha: float,
    beta: float,
    eval_time: float = 10.0,
    memory: float = 10.0,
    condition_limit: float = CONDITION_LIMIT,
    return_rows: bool = False,
):
    """Coefficients ``(a1, a2, a3)`` implied by ``c`` for the given orders.

    With ``return_rows`` the result is ``((a1, a2, a3), rows, condition)``.
    """
    rows = build_system(c, alpha, beta, eval_time, memory)
    matrix = np.array([[row.p, row.q, row.r] for row in rows])
    rhs = np.array([row.s for row in rows])
    condition = _condition(matrix)
    if not condition <= condition_limit:
        offending = _dependent_rows(matrix)
        names = ", ".join(f"{k} ({LEVEL_INPUTS[k]})" for k in offending)
        raise SingularSystemError(
            f"equation system is singular or ill-conditioned (condition {condition:.3g} > "
            f"{condition_limit:.3g}); dependent rows: {names}",
            rows=offending,
            condition=condition,
        )
    try:
        solution = solve_linear(matrix, rhs)
    except SingularSystemError as exc:
        raise SingularSystemError(str(exc), rows=exc.rows, condition=condition) from None
    triple = tuple(float(v) for v in solution)
    if return_rows:
        return triple, rows, condition
    return triple


def reconstruct_least_squares(
    c: SampledSignal, alpha: float, beta: float, eval_times: Sequence[float], memory: float = 10.0
):
    """Least-squares coefficients from the three rows at each of several instants."""
    rows = [row for t in eval_times for row in build_system(c, alpha, beta, t, memory)]
    matrix = np.array([[row.p, row.q, row.r] for row in rows])
    rhs = np.array([row.s for row in rows])
    # rows of higher level grow like t^level; weight each by 1 / |s|
    w = 1.0 / np.maximum(np.abs(rhs), 1.0)
    solution, *_ = np.linalg.lstsq(matrix * w[:, None], rhs * w, rcond=None)
    return tuple(float(v) for v in solution)


@dataclass
class RankedModel:
    model: FractionalModel
    fitness: float | None
    index: int
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "model": self.model.as_dict(),
            "fitness": self.fitness,
            "error": self.error,
        }


def rank_models(
    candidates: Sequence[FractionalModel], observations: SampledSignal, simulation_step: float | None = None
) -> list:
    """Candidates sorted by step-response fitness against ``observations``.

    By default each candidate is simulated on the observation grid. When the
    observations were thinned from data sampled every ``simulation_step``
    seconds, candidates are simulated at that step and thinned the same way,
    which keeps the generating model at zero fitness.

    Ties keep their input order. Candidates whose simulation fails are put
    last with ``fitness=None``.
    """
    if not candidates:
        raise ValueError("no candidate models to rank")
    horizon = observations.period * (len(observations) - 1)
    if simulation_step is None:
        score = make_fitness(
            observations, five_parameter_scenario(observation_period=observations.period, horizon=horizon)
        ).model_fitness
    else:
        score = _thinned_fitness(observations, simulation_step, horizon)
    ranked, failed = [], []
    for i, model in enumerate(candidates):
        try:
            ranked.append(RankedModel(model, score(model), i))
        except FitnessError as exc:
            failed.append(RankedModel(model, None, i, str(exc)))
    ranked.sort(key=lambda m: m.fitness)
    return ranked + failed


def _thinned_fitness(observations: SampledSignal, step: float, horizon: float):
    if not step > 0:
        raise ValueError(f"simulation_step must be positive, got {step!r}")
    observed = np.asarray(observations.samples)

    def score(model: FractionalModel) -> float:
        try:
            fine = simulate(model, "step", step, horizon)
        except SimulationError as exc:
            raise FitnessError(str(exc)) from exc
        residual = downsample(fine, observations.period).samples[: observed.size] - observed
        value = float(np.dot(residual, residual))
        if not math.isfinite(value):
            raise FitnessError(f"non-finite fitness for {model}")
        return value

    return score
