"""Global-best particle swarm optimization over a box.

Each iteration updates every particle synchronously::

    v <- w v + c1 phi1 (pbest - x) + c2 phi2 (gbest - x)
    x <- x + v

with fresh uniform ``phi1, phi2`` in [0, 1] per particle and dimension and an
inertia weight ``w`` decreasing linearly over the run. Velocities are clipped
to the velocity box, positions to the search box (velocity is left as is
when a position is clipped).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .seeds import make_rng

__all__ = [
    "FitnessError",
    "SwarmConfig",
    "SwarmState",
    "OptimizeResult",
    "inertia_at",
    "optimize",
]


class FitnessError(ArithmeticError):
    """The fitness oracle failed or returned a non-finite value."""

    def __init__(self, message, position=None):
        super().__init__(message)
        self.position = position


def _as_bounds(bounds, name):
    arr = np.array(bounds, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 1:
        raise ValueError(f"{name} must be a sequence of [min, max] pairs")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    if not np.all(arr[:, 0] < arr[:, 1]):
        raise ValueError(f"{name} needs min < max in every dimension")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SwarmConfig:
    """Swarm hyperparameters. ``seed`` selects the PCG64 stream of the run."""

    position_bounds: np.ndarray
    velocity_bounds: np.ndarray
    particle_count: int = 40
    iterations: int = 150
    c1: float = 1.4
    c2: float = 1.4
    inertia_start: float = 0.9
    inertia_end: float = 0.4
    seed: int = 0

    def __post_init__(self):
        pos = _as_bounds(self.position_bounds, "position_bounds")
        vel = _as_bounds(self.velocity_bounds, "velocity_bounds")
        if pos.shape != vel.shape:
            raise ValueError(
                f"position_bounds ({pos.shape[0]}-D) and velocity_bounds "
                f"({vel.shape[0]}-D) differ in dimension"
            )
        object.__setattr__(self, "position_bounds", pos)
        object.__setattr__(self, "velocity_bounds", vel)
        if int(self.particle_count) < 1:
            raise ValueError(f"particle_count must be >= 1, got {self.particle_count!r}")
        if int(self.iterations) < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")

    @property
    def dimension(self) -> int:
        return self.position_bounds.shape[0]

    def with_seed(self, seed: int) -> "SwarmConfig":
        return SwarmConfig(
            self.position_bounds,
            self.velocity_bounds,
            self.particle_count,
            self.iterations,
            self.c1,
            self.c2,
            self.inertia_start,
            self.inertia_end,
            seed,
        )

    def to_dict(self) -> dict:
        return {
            "particle_count": int(self.particle_count),
            "iterations": int(self.iterations),
            "c1": float(self.c1),
            "c2": float(self.c2),
            "inertia_start": float(self.inertia_start),
            "inertia_end": float(self.inertia_end),
            "position_bounds": self.position_bounds.tolist(),
            "velocity_bounds": self.velocity_bounds.tolist(),
            "seed": int(self.seed),
        }


@dataclass
class SwarmState:
    """Snapshot of the swarm handed to the ``callback`` of :func:`optimize`."""

    iteration: int
    positions: np.ndarray
    velocities: np.ndarray
    fitness: np.ndarray
    personal_best: np.ndarray
    personal_best_fitness: np.ndarray
    global_best: np.ndarray
    global_best_fitness: float


@dataclass
class OptimizeResult:
    best_position: np.ndarray
    best_fitness: float
    history: np.ndarray = field(repr=False)
    evaluations: int = 0


def inertia_at(iteration: int, total: int, start: float = 0.9, end: float = 0.4) -> float:
    """Inertia weight of ``iteration`` (0-based) in a linear ``start -> end`` schedule."""
    if total < 1:
        raise ValueError(f"total must be >= 1, got {total}")
    if not 0 <= iteration < total:
        raise ValueError(f"iteration {iteration} outside [0, {total})")
    if total == 1:
        return float(start)
    return start + (end - start) * iteration / (total - 1)


def _evaluate(fitness, positions, executor):
    if executor is None:
        values = [fitness(x) for x in positions]
    else:
        values = list(executor.map(fitness, list(positions)))
    values = np.array(values, dtype=np.float64)
    bad = ~np.isfinite(values)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise FitnessError(
            f"fitness returned {values[i]!r} at position {positions[i].tolist()}",
            positions[i].copy(),
        )
    return values


def optimize(
    fitness: Callable[[np.ndarray], float],
    config: SwarmConfig,
    callback: Optional[Callable[[SwarmState], None]] = None,
    executor=None,
) -> OptimizeResult:
    """Minimize ``fitness`` over ``config.position_bounds``.

    Parameters
    ----------
    fitness : callable
        Maps a position vector of length D to a finite float. It must be
        re-entrant when an ``executor`` is given.
    config : SwarmConfig
        Bounds, swarm size, schedule and seed.
    callback : callable, optional
        Called with a :class:`SwarmState` after initialization (iteration 0)
        and after each iteration.
    executor : concurrent.futures.Executor, optional
        Used to evaluate the particles of one iteration concurrently. The
        random draws of an iteration are made before evaluation, so results do
        not depend on evaluation order.

    Returns
    -------
    OptimizeResult
        Global best position and fitness, and the global-best fitness after
        each of the ``config.iterations`` iterations.

    Raises
    ------
    FitnessError
        If any evaluation is non-finite or raises ``ArithmeticError``.
    """
    rng = make_rng(config.seed)
    n, d = int(config.particle_count), config.dimension
    lo, hi = config.position_bounds[:, 0], config.position_bounds[:, 1]
    vlo, vhi = config.velocity_bounds[:, 0], config.velocity_bounds[:, 1]

    def evaluate(positions):
        try:
            return _evaluate(fitness, positions, executor)
        except FitnessError:
            raise
        except ArithmeticError as exc:
            raise FitnessError(f"fitness evaluation failed: {exc}") from exc

    x = lo + (hi - lo) * rng.random((n, d))
    v = vlo + (vhi - vlo) * rng.random((n, d))
    f = evaluate(x)
    pbest, pbest_f = x.copy(), f.copy()
    g = int(np.argmin(pbest_f))
    gbest, gbest_f = pbest[g].copy(), float(pbest_f[g])
    if callback is not None:
        callback(SwarmState(0, x, v, f, pbest, pbest_f, gbest, gbest_f))

    history = np.empty(int(config.iterations))
    for it in range(int(config.iterations)):
        w = inertia_at(it, int(config.iterations), config.inertia_start, config.inertia_end)
        phi1 = rng.random((n, d))
        phi2 = rng.random((n, d))
        v = w * v + config.c1 * phi1 * (pbest - x) + config.c2 * phi2 * (gbest - x)
        np.clip(v, vlo, vhi, out=v)
        x = np.clip(x + v, lo, hi)
        f = evaluate(x)
        improved = f < pbest_f
        pbest[improved] = x[improved]
        pbest_f[improved] = f[improved]
        g = int(np.argmin(pbest_f))
        if pbest_f[g] < gbest_f:
            gbest, gbest_f = pbest[g].copy(), float(pbest_f[g])
        history[it] = gbest_f
        if callback is not None:
            callback(SwarmState(it + 1, x, v, f, pbest, pbest_f, gbest, gbest_f))

    evaluations = n * (int(config.iterations) + 1)
    return OptimizeResult(gbest, gbest_f, history, evaluations)
