"""Identification scenarios, the step-response fitness and multi-run statistics."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .fracsim import PARAMETER_NAMES, FractionalModel, SimulationError, simulate
from .pso import FitnessError, SwarmConfig, optimize
from .seeds import derive_seed, make_rng
from .signals import SampledSignal

log = logging.getLogger(__name__)

__all__ = [
    "TRUE_MODEL",
    "Scenario",
    "StepFitness",
    "NoiseSpec",
    "RunReport",
    "make_fitness",
    "corrupt",
    "identify",
    "four_parameter_scenario",
    "five_parameter_scenario",
    "default_swarm_size",
    "percent_error",
]

#: Process used to synthesize the observations: 1 / (0.8 s^2.2 + 0.5 s^0.9 + 1).
TRUE_MODEL = FractionalModel(a1=0.8, alpha=2.2, a2=0.5, beta=0.9, a3=1.0)

COEFFICIENT_RANGE = (0.0, 2.0)
COEFFICIENT_VELOCITY = (-0.5, 0.5)
ORDER_VELOCITY = (-0.1, 0.1)
ALPHA_RANGE = (2.0, 2.4)
BETA_RANGE = (0.7, 1.1)


def _pair(value, what):
    lo, hi = (float(v) for v in value)
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise ValueError(f"{what} must be a finite [min, max] with min < max, got {value!r}")
    return lo, hi


@dataclass(frozen=True)
class Scenario:
    """Which parameters are searched, their boxes, and the observation grid.

    Positions are decoded in the order of ``free``.
    """

    free: tuple
    fixed: Mapping[str, float]
    search: Mapping[str, tuple]
    velocity: Mapping[str, tuple]
    observation_period: float = 0.05
    horizon: float = 10.0

    def __post_init__(self):
        free = tuple(self.free)
        if not free:
            raise ValueError("a scenario needs at least one free parameter")
        unknown = [p for p in free if p not in PARAMETER_NAMES]
        if unknown:
            raise ValueError(f"unknown parameters: {', '.join(unknown)}")
        if len(set(free)) != len(free):
            raise ValueError("free parameters must be distinct")
        fixed = {k: float(v) for k, v in dict(self.fixed).items()}
        overlap = set(fixed) & set(free)
        if overlap:
            raise ValueError(f"parameters both free and fixed: {', '.join(sorted(overlap))}")
        missing = [p for p in PARAMETER_NAMES if p not in free and p not in fixed]
        if missing:
            raise ValueError(f"parameters neither free nor fixed: {', '.join(missing)}")
        extra = [p for p in fixed if p not in PARAMETER_NAMES]
        if extra:
            raise ValueError(f"unknown fixed parameters: {', '.join(extra)}")
        search, velocity = {}, {}
        for p in free:
            if p not in self.search:
                raise ValueError(f"free parameter {p} has no search range")
            if p not in self.velocity:
                raise ValueError(f"free parameter {p} has no velocity range")
            search[p] = _pair(self.search[p], f"search range of {p}")
            velocity[p] = _pair(self.velocity[p], f"velocity range of {p}")
        if not (self.observation_period > 0 and self.horizon >= self.observation_period):
            raise ValueError("need observation_period > 0 and horizon >= observation_period")
        object.__setattr__(self, "free", free)
        object.__setattr__(self, "fixed", fixed)
        object.__setattr__(self, "search", search)
        object.__setattr__(self, "velocity", velocity)
        object.__setattr__(self, "observation_period", float(self.observation_period))
        object.__setattr__(self, "horizon", float(self.horizon))

        # every point of the box must decode to a valid model
        lowest = {p: search[p][0] for p in free} | fixed
        highest = {p: search[p][1] for p in free} | fixed
        if lowest["a1"] < 0:
            raise ValueError("the a1 range must be nonnegative")
        if lowest["beta"] < 0:
            raise ValueError("the beta range must be nonnegative")
        if not lowest["alpha"] > highest["beta"]:
            raise ValueError("search ranges allow alpha <= beta")
        if all(lowest[c] == 0 for c in ("a1", "a2", "a3")):
            log.debug("scenario box contains the degenerate model a1 = a2 = a3 = 0")

    @property
    def dimension(self) -> int:
        return len(self.free)

    @property
    def sample_count(self) -> int:
        return int(math.floor(self.horizon / self.observation_period * (1 + 1e-12))) + 1

    def decode(self, position) -> FractionalModel:
        values = dict(self.fixed)
        values.update(zip(self.free, (float(x) for x in position)))
        return FractionalModel.from_mapping(values)

    def encode(self, model: FractionalModel) -> np.ndarray:
        return np.array([getattr(model, p) for p in self.free])

    def position_bounds(self) -> np.ndarray:
        return np.array([self.search[p] for p in self.free])

    def velocity_bounds(self) -> np.ndarray:
        return np.array([self.velocity[p] for p in self.free])

    def swarm_config(self, particle_count=None, iterations=None, seed=0, **kwargs) -> SwarmConfig:
        """Swarm settings for this box; sizes default to :func:`default_swarm_size`."""
        default_n, default_it = default_swarm_size(self.dimension)
        return SwarmConfig(
            self.position_bounds(),
            self.velocity_bounds(),
            particle_count=default_n if particle_count is None else particle_count,
            iterations=default_it if iterations is None else iterations,
            seed=seed,
            **kwargs,
        )

    def pin(self, name: str, value: float) -> "Scenario":
        """Scenario with free parameter ``name`` fixed at ``value``."""
        if name not in self.free:
            raise ValueError(f"{name} is not a free parameter of this scenario")
        return Scenario(
            tuple(p for p in self.free if p != name),
            {**self.fixed, name: float(value)},
            {p: r for p, r in self.search.items() if p != name},
            {p: r for p, r in self.velocity.items() if p != name},
            self.observation_period,
            self.horizon,
        )

    def to_dict(self) -> dict:
        return {
            "free": list(self.free),
            "fixed": dict(self.fixed),
            "search": {p: list(r) for p, r in self.search.items()},
            "velocity": {p: list(r) for p, r in self.velocity.items()},
            "observation_period": self.observation_period,
            "horizon": self.horizon,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Scenario":
        known = {"free", "fixed", "search", "velocity", "observation_period", "horizon"}
        try:
            kwargs = {k: data[k] for k in ("free", "search", "velocity")}
        except KeyError as exc:
            raise ValueError(f"scenario is missing field {exc.args[0]!r}") from None
        kwargs["fixed"] = data.get("fixed", {})
        for k in ("observation_period", "horizon"):
            if k in data:
                kwargs[k] = data[k]
        return cls(**{k: v for k, v in kwargs.items() if k in known})


def default_swarm_size(dimension: int) -> tuple:
    """(particles, iterations): 50/200 for five free parameters, else 40/150."""
    return (50, 200) if dimension >= 5 else (40, 150)


def four_parameter_scenario(beta: float = 0.9, **kwargs) -> Scenario:
    """a1, alpha, a2, a3 free with beta known."""
    return Scenario(
        free=("a1", "alpha", "a2", "a3"),
        fixed={"beta": beta},
        search={"a1": COEFFICIENT_RANGE, "alpha": ALPHA_RANGE, "a2": COEFFICIENT_RANGE, "a3": COEFFICIENT_RANGE},
        velocity={"a1": COEFFICIENT_VELOCITY, "alpha": ORDER_VELOCITY, "a2": COEFFICIENT_VELOCITY, "a3": COEFFICIENT_VELOCITY},
        **kwargs,
    )


def five_parameter_scenario(**kwargs) -> Scenario:
    return Scenario(
        free=PARAMETER_NAMES,
        fixed={},
        search={
            "a1": COEFFICIENT_RANGE,
            "alpha": ALPHA_RANGE,
            "a2": COEFFICIENT_RANGE,
            "beta": BETA_RANGE,
            "a3": COEFFICIENT_RANGE,
        },
        velocity={
            "a1": COEFFICIENT_VELOCITY,
            "alpha": ORDER_VELOCITY,
            "a2": COEFFICIENT_VELOCITY,
            "beta": ORDER_VELOCITY,
            "a3": COEFFICIENT_VELOCITY,
        },
        **kwargs,
    )


class StepFitness:
    """Sum of squared deviations between observations and a candidate's step response.

    The candidate is simulated on the observation grid itself, so the model
    that generated noiseless observations scores exactly zero.
    """

    def __init__(self, observations: SampledSignal, scenario: Scenario):
        if not math.isclose(observations.period, scenario.observation_period, rel_tol=1e-9):
            raise ValueError(
                f"observations are sampled every {observations.period!r} s, "
                f"scenario expects {scenario.observation_period!r} s"
            )
        if abs(observations.start_time) > 1e-9 * observations.period:
            raise ValueError("observations must start at t = 0, the instant the step is applied")
        count = scenario.sample_count
        if len(observations) < count:
            raise ValueError(
                f"observations hold {len(observations)} samples, the {scenario.horizon!r} s "
                f"horizon needs {count}"
            )
        self.scenario = scenario
        self.observed = np.array(observations.samples[:count])
        self.step = scenario.observation_period
        self.horizon = self.step * (count - 1)

    def model_fitness(self, model: FractionalModel) -> float:
        try:
            response = simulate(model, "step", self.step, self.horizon).samples
        except SimulationError as exc:
            raise FitnessError(str(exc)) from exc
        residual = response - self.observed
        value = float(np.dot(residual, residual))
        if not math.isfinite(value):
            raise FitnessError(f"non-finite fitness for {model}")
        return value

    def __call__(self, position) -> float:
        try:
            model = self.scenario.decode(position)
        except ValueError as exc:
            raise FitnessError(f"position decodes to an invalid model: {exc}", np.asarray(position)) from exc
        return self.model_fitness(model)


def make_fitness(observations: SampledSignal, scenario: Scenario) -> StepFitness:
    return StepFitness(observations, scenario)


def corrupt(signal: SampledSignal, amplitude: float, seed: int) -> SampledSignal:
    """Add independent uniform noise from ``[-amplitude, amplitude]`` to every sample."""
    if not amplitude >= 0:
        raise ValueError(f"amplitude must be nonnegative, got {amplitude!r}")
    if amplitude == 0:
        return signal
    noise = make_rng(seed).uniform(-amplitude, amplitude, len(signal))
    return signal.with_samples(signal.samples + noise)


@dataclass(frozen=True)
class NoiseSpec:
    amplitude: float
    seed: int = 0


def percent_error(estimate: float, truth: float) -> float:
    """``|estimate - truth| / |truth| * 100``; NaN when the truth is zero."""
    if truth == 0:
        return math.nan
    return abs(estimate - truth) / abs(truth) * 100.0


@dataclass
class RunReport:
    """Per-run estimates and cross-run statistics."""

    parameters: tuple
    estimates: list
    fitness: list
    pso_seeds: list
    noise_seeds: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    clean_fitness: Optional[list] = None
    truth: Optional[FractionalModel] = None
    histories: list = field(default_factory=list, repr=False)

    @property
    def succeeded(self) -> list:
        return [i for i, f in enumerate(self.fitness) if f is not None]

    @property
    def best_run(self) -> Optional[int]:
        ok = self.succeeded
        if not ok:
            return None
        return min(ok, key=lambda i: self.fitness[i])

    @property
    def best_model(self) -> Optional[FractionalModel]:
        i = self.best_run
        return None if i is None else self.estimates[i]

    @property
    def best_fitness(self) -> Optional[float]:
        i = self.best_run
        return None if i is None else self.fitness[i]

    def _column(self, name):
        return np.array([getattr(self.estimates[i], name) for i in self.succeeded])

    def mean(self) -> dict:
        if not self.succeeded:
            return {p: math.nan for p in self.parameters}
        return {p: float(np.mean(self._column(p))) for p in self.parameters}

    def std(self) -> dict:
        """Sample standard deviation (n - 1 denominator); 0 for a single run."""
        out = {}
        for p in self.parameters:
            col = self._column(p)
            if col.size == 0:
                out[p] = math.nan
            elif col.size == 1 or np.all(col == col[0]):
                out[p] = 0.0
            else:
                out[p] = float(np.std(col, ddof=1))
        return out

    def percent_error_of_mean(self) -> Optional[dict]:
        if self.truth is None:
            return None
        means = self.mean()
        return {p: percent_error(means[p], getattr(self.truth, p)) for p in self.parameters}

    def to_dict(self) -> dict:
        runs = []
        for i, model in enumerate(self.estimates):
            run = {
                "index": i,
                "pso_seed": self.pso_seeds[i],
                "noise_seed": self.noise_seeds[i] if self.noise_seeds else None,
                "failed": self.fitness[i] is None,
                "error": self.failures[i] if self.failures else None,
                "estimate": None if model is None else model.as_dict(),
                "fitness": self.fitness[i],
            }
            if self.clean_fitness is not None:
                run["clean_fitness"] = self.clean_fitness[i]
            runs.append(run)
        best = self.best_run
        pct = self.percent_error_of_mean()
        best_pct = None
        if self.truth is not None and best is not None:
            best_pct = {p: percent_error(getattr(self.estimates[best], p), getattr(self.truth, p)) for p in self.parameters}
        return {
            "parameters": list(self.parameters),
            "runs": runs,
            "best_run": best,
            "best_estimate": None if best is None else self.estimates[best].as_dict(),
            "best_fitness": self.best_fitness,
            "best_percent_error": best_pct,
            "statistics": {
                "mean": self.mean(),
                "std": self.std(),
                "percent_error_of_mean": pct,
            },
            "truth": None if self.truth is None else self.truth.as_dict(),
        }


def identify(
    observations: SampledSignal,
    scenario: Scenario,
    swarm: SwarmConfig,
    runs: int = 5,
    noise: Optional[NoiseSpec] = None,
    truth: Optional[FractionalModel] = None,
    report_clean: bool = False,
    executor=None,
) -> RunReport:
    """Run ``runs`` independent swarm optimizations against the observations.

    Run ``i`` uses seed ``derive_seed(swarm.seed, "pso", i)``. With ``noise``,
    run ``i`` sees its own corrupted copy of the observations drawn with
    ``derive_seed(noise.seed, "noise", i)``; reported fitness is against that
    copy, and ``report_clean`` adds the fitness against the clean data.
    """
    if runs < 1:
        raise ValueError(f"runs must be >= 1, got {runs!r}")
    if swarm.dimension != scenario.dimension:
        raise ValueError(
            f"swarm is {swarm.dimension}-D but the scenario has {scenario.dimension} free parameters"
        )
    clean = make_fitness(observations, scenario) if (report_clean or noise is None) else None
    report = RunReport(
        parameters=scenario.free,
        estimates=[],
        fitness=[],
        pso_seeds=[],
        truth=truth,
        clean_fitness=[] if report_clean else None,
    )
    for i in range(runs):
        pso_seed = derive_seed(swarm.seed, "pso", i)
        report.pso_seeds.append(pso_seed)
        if noise is not None:
            noise_seed = derive_seed(noise.seed, "noise", i)
            report.noise_seeds.append(noise_seed)
            fitness = make_fitness(corrupt(observations, noise.amplitude, noise_seed), scenario)
        else:
            fitness = clean
        try:
            result = optimize(fitness, swarm.with_seed(pso_seed), executor=executor)
        except FitnessError as exc:
            log.warning("run %d failed: %s", i, exc)
            report.estimates.append(None)
            report.fitness.append(None)
            report.failures.append(str(exc))
            report.histories.append(None)
            if report.clean_fitness is not None:
                report.clean_fitness.append(None)
            continue
        model = scenario.decode(result.best_position)
        report.estimates.append(model)
        report.fitness.append(result.best_fitness)
        report.failures.append(None)
        report.histories.append(result.history)
        if report.clean_fitness is not None:
            report.clean_fitness.append(clean.model_fitness(model))
        log.info("run %d: F = %.6g, %s", i, result.best_fitness, model)
    return report
