"""Particle swarm identification of fractional-order processes.

Identifies ``(a1, alpha, a2, beta, a3)`` of ``1 / (a1 s^alpha + a2 s^beta + a3)``
from a sampled unit-step response, cross-checks estimated orders by
Grünwald-Letnikov reconstruction of the coefficients, and refines a single
parameter by concentrated interval search.
"""

from .fracsim import PARAMETER_NAMES, FractionalModel, SimulationError, downsample, simulate
from .grunwald import GlCoefficients, gl_coefficients, gl_differint
from .identify import (
    TRUE_MODEL,
    NoiseSpec,
    RunReport,
    Scenario,
    corrupt,
    five_parameter_scenario,
    four_parameter_scenario,
    identify,
    make_fitness,
)
from .pso import FitnessError, OptimizeResult, SwarmConfig, inertia_at, optimize
from .refine import concentrated_search
from .signals import SampledSignal
from .verify import SingularSystemError, build_equation, rank_models, reconstruct_coefficients

__all__ = [
    "PARAMETER_NAMES",
    "TRUE_MODEL",
    "FitnessError",
    "FractionalModel",
    "GlCoefficients",
    "NoiseSpec",
    "OptimizeResult",
    "RunReport",
    "SampledSignal",
    "Scenario",
    "SimulationError",
    "SingularSystemError",
    "SwarmConfig",
    "build_equation",
    "concentrated_search",
    "corrupt",
    "downsample",
    "five_parameter_scenario",
    "four_parameter_scenario",
    "gl_coefficients",
    "gl_differint",
    "identify",
    "inertia_at",
    "make_fitness",
    "optimize",
    "rank_models",
    "reconstruct_coefficients",
    "simulate",
]
