"""Concentrated search: interval subdivision of one parameter.

The target parameter's range is split into equal subintervals. For each
subinterval the target is pinned at its center and the remaining free
parameters are identified by a swarm run. The search descends into the
subinterval with the lowest fitness until the interval is narrow enough.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .fracsim import FractionalModel
from .identify import Scenario, make_fitness
from .pso import FitnessError, SwarmConfig, optimize
from .seeds import derive_seed
from .signals import SampledSignal

log = logging.getLogger(__name__)

__all__ = ["NominalResult", "RefinementLevel", "RefineResult", "RefineError", "concentrated_search"]


class RefineError(RuntimeError):
    def __init__(self, message, levels=()):
        super().__init__(message)
        self.levels = list(levels)


@dataclass
class NominalResult:
    interval: tuple
    nominal: float
    fitness: Optional[float]
    model: Optional[FractionalModel]
    seed: int
    error: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "range": list(self.interval),
            "nominal": self.nominal,
            "fitness": self.fitness,
            "estimate": None if self.model is None else self.model.as_dict(),
            "seed": self.seed,
            "error": self.error,
        }


@dataclass
class RefinementLevel:
    parameter: str
    interval: tuple
    results: list
    chosen: int
    retried: bool = False
    monotone_violation: bool = False

    @property
    def subintervals(self) -> list:
        return [r.interval for r in self.results]

    @property
    def nominals(self) -> list:
        return [r.nominal for r in self.results]

    @property
    def best(self) -> NominalResult:
        return self.results[self.chosen]

    def to_dict(self) -> dict:
        rows = []
        for i, r in enumerate(self.results):
            rows.append(r.to_dict() | {"chosen": i == self.chosen})
        return {
            "parameter": self.parameter,
            "interval": list(self.interval),
            "rows": rows,
            "chosen": self.chosen,
            "retried": self.retried,
            "monotone_violation": self.monotone_violation,
        }


@dataclass
class RefineResult:
    model: FractionalModel
    fitness: float
    levels: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "estimate": self.model.as_dict(),
            "fitness": self.fitness,
            "levels": [level.to_dict() for level in self.levels],
        }


def _split(lo: float, hi: float, parts: int) -> list:
    edges = np.linspace(lo, hi, parts + 1)
    edges[0], edges[-1] = lo, hi
    return [(float(a), float(b)) for a, b in zip(edges[:-1], edges[1:])]


def _branching_at(branching, level: int) -> int:
    if isinstance(branching, int):
        return branching
    schedule = list(branching)
    return schedule[min(level, len(schedule) - 1)]


def _run_nominals(observations, scenario, target, intervals, swarm, seed, tag, executor):
    results = []
    for j, (a, b) in enumerate(intervals):
        nominal = 0.5 * (a + b)
        inner = scenario.pin(target, nominal)
        run_seed = derive_seed(seed, tag, j)
        config = SwarmConfig(
            inner.position_bounds(),
            inner.velocity_bounds(),
            swarm.particle_count,
            swarm.iterations,
            swarm.c1,
            swarm.c2,
            swarm.inertia_start,
            swarm.inertia_end,
            run_seed,
        )
        try:
            out = optimize(make_fitness(observations, inner), config, executor=executor)
        except FitnessError as exc:
            log.warning("nominal %s = %.6g failed: %s", target, nominal, exc)
            results.append(NominalResult((a, b), nominal, None, None, run_seed, str(exc)))
            continue
        model = inner.decode(out.best_position)
        results.append(NominalResult((a, b), nominal, out.best_fitness, model, run_seed))
        log.info("%s = %.6g: F = %.6g", target, nominal, out.best_fitness)
    return results


def _choose(results) -> Optional[int]:
    ok = [i for i, r in enumerate(results) if r.fitness is not None]
    if not ok:
        return None
    return min(ok, key=lambda i: results[i].fitness)


def concentrated_search(
    observations: SampledSignal,
    scenario: Scenario,
    target: str,
    bounds: Sequence[float],
    branching=5,
    width_tolerance: float = 0.002,
    swarm: Optional[SwarmConfig] = None,
    seed: int = 0,
    executor=None,
    max_levels: int = 64,
) -> RefineResult:
    """Refine ``target`` over ``bounds`` by recursive subdivision.

    Parameters
    ----------
    observations : SampledSignal
        Step-response data on the scenario's observation grid, used as is.
    scenario : Scenario
        Scenario in which ``target`` is free; the inner runs search the
        other free parameters.
    target : str
        Parameter to subdivide.
    bounds : (lo, hi)
        Initial interval for ``target``.
    branching : int or sequence of int
        Subintervals per level; a sequence gives a per-level schedule whose
        last entry repeats.
    width_tolerance : float
        Stop once the chosen subinterval is at most this wide. A tolerance
        no smaller than ``hi - lo`` yields a single run at the center.
    swarm : SwarmConfig, optional
        Swarm size and schedule of the inner runs (its bounds and seed are
        ignored). Defaults to 40 particles and 150 iterations.
    seed : int
        Master seed; nominal ``j`` of level ``k`` uses
        ``derive_seed(seed, f"refine/{k}", j)``.
    """
    if target not in scenario.free:
        raise ValueError(f"{target} is not a free parameter of the scenario")
    lo, hi = (float(v) for v in bounds)
    if not lo < hi:
        raise ValueError(f"bounds must satisfy lo < hi, got {bounds!r}")
    if not width_tolerance > 0:
        raise ValueError(f"width_tolerance must be positive, got {width_tolerance!r}")
    if scenario.dimension < 2:
        raise ValueError("the scenario needs another free parameter besides the target")
    if swarm is None:
        reduced = scenario.pin(target, 0.5 * (lo + hi))
        swarm = reduced.swarm_config(40, 150)

    levels = []
    interval = (lo, hi)
    previous_best = math.inf
    while True:
        width = interval[1] - interval[0]
        parts = 1 if width <= width_tolerance else _branching_at(branching, len(levels))
        if parts < 1 or (parts < 2 and width > width_tolerance):
            raise ValueError(f"branching must be >= 2, got {parts!r}")
        intervals = _split(interval[0], interval[1], parts)
        k = len(levels)
        results = _run_nominals(observations, scenario, target, intervals, swarm, seed, f"refine/{k}", executor)
        chosen = _choose(results)
        retried = False
        if chosen is not None and results[chosen].fitness > previous_best:
            log.info("level %d best F %.6g exceeds parent %.6g; retrying", k, results[chosen].fitness, previous_best)
            retried = True
            again = _run_nominals(
                observations, scenario, target, intervals, swarm, seed, f"refine/{k}/retry", executor
            )
            results = [
                b if (b.fitness is not None and (a.fitness is None or b.fitness < a.fitness)) else a
                for a, b in zip(results, again)
            ]
            chosen = _choose(results)
        if chosen is None:
            raise RefineError(
                f"every nominal of level {k} failed: "
                + "; ".join(f"{r.nominal:.6g}: {r.error}" for r in results),
                levels,
            )
        violation = results[chosen].fitness > previous_best
        if violation:
            log.warning("level %d: best fitness %.6g exceeds the previous level's %.6g", k, results[chosen].fitness, previous_best)
        level = RefinementLevel(target, interval, results, chosen, retried, violation)
        levels.append(level)
        previous_best = min(previous_best, level.best.fitness)
        interval = level.best.interval
        if interval[1] - interval[0] <= width_tolerance or parts == 1:
            break
        if len(levels) >= max_levels:
            raise RefineError(f"no convergence to width {width_tolerance!r} in {max_levels} levels", levels)

    best = levels[-1].best
    return RefineResult(best.model, best.fitness, levels)
