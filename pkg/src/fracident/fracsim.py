"""Time-domain simulation of ``1 / (a1 s^alpha + a2 s^beta + a3)``.

The response is produced by implicit Grünwald-Letnikov time stepping of

    r(t) = a1 D^alpha c(t) + a2 D^beta c(t) + a3 c(t)

on a uniform grid with zero initial history. At step ``k`` the unknown
``c(t_k)`` enters every term with weight ``b_0 = 1``, so

    c_k = (r_k - a1 h^-alpha sum_{j>=1} b_j^alpha c_{k-j}
               - a2 h^-beta  sum_{j>=1} b_j^beta  c_{k-j})
          / (a1 h^-alpha + a2 h^-beta + a3).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.signal import lfilter

from .grunwald import gl_weights, memory_taps
from .signals import SampledSignal

__all__ = [
    "PARAMETER_NAMES",
    "FractionalModel",
    "SimulationError",
    "simulate",
    "input_samples",
    "operator_kernel",
    "downsample",
]

PARAMETER_NAMES = ("a1", "alpha", "a2", "beta", "a3")


class SimulationError(ArithmeticError):
    """The implicit step is ill-posed for the requested model and step."""


@dataclass(frozen=True)
class FractionalModel:
    """Two-term fractional process ``1 / (a1 s^alpha + a2 s^beta + a3)``.

    ``alpha > beta >= 0`` is enforced. Coefficients must be finite and ``a1``
    nonnegative; whether the implicit step is solvable is checked by
    :func:`simulate`.
    """

    a1: float
    alpha: float
    a2: float
    beta: float
    a3: float

    def __post_init__(self):
        for name in PARAMETER_NAMES:
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if self.a1 < 0:
            raise ValueError(f"a1 must be nonnegative, got {self.a1!r}")
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta!r}")
        if not self.alpha > self.beta:
            raise ValueError(f"alpha ({self.alpha!r}) must exceed beta ({self.beta!r})")

    @classmethod
    def from_mapping(cls, values) -> "FractionalModel":
        missing = [name for name in PARAMETER_NAMES if name not in values]
        if missing:
            raise ValueError(f"missing model parameters: {', '.join(missing)}")
        return cls(**{name: values[name] for name in PARAMETER_NAMES})

    def as_dict(self) -> dict:
        return asdict(self)

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, name) for name in PARAMETER_NAMES)

    def scaled(self, factor: float) -> "FractionalModel":
        """Same dynamics with every coefficient multiplied by ``factor``."""
        return FractionalModel(
            self.a1 * factor, self.alpha, self.a2 * factor, self.beta, self.a3 * factor
        )


def input_samples(kind, step: float, count: int) -> np.ndarray:
    """Input ``r(t_k)`` for ``kind`` in {"step", "ramp", "parabola"} or a sampled signal."""
    if isinstance(kind, SampledSignal):
        if not math.isclose(kind.period, step, rel_tol=1e-9):
            raise ValueError(
                f"sampled input period {kind.period!r} differs from simulation step {step!r}"
            )
        if len(kind) < count:
            raise ValueError(f"sampled input has {len(kind)} samples, need {count}")
        return np.asarray(kind.samples[:count], dtype=np.float64)
    t = step * np.arange(count)
    if kind == "step":
        return np.ones(count)
    if kind == "ramp":
        return t
    if kind == "parabola":
        return 0.5 * t * t
    raise ValueError(f"unknown input kind {kind!r}")


def operator_kernel(model: FractionalModel, step: float, count: int, memory_length=None) -> np.ndarray:
    """Impulse kernel ``g`` of the discretized operator, so that ``r = g * c``.

    ``g_0`` is the implicit denominator. With ``memory_length`` the fractional
    sums are truncated to ``floor(L / h)`` taps.
    """
    taps = count - 1 if memory_length is None else min(count - 1, memory_taps(memory_length, step))
    try:
        scale_alpha = model.a1 * step ** (-model.alpha)
        scale_beta = model.a2 * step ** (-model.beta)
    except OverflowError:
        raise SimulationError(f"step {step!r} overflows h^-alpha for {model}") from None
    kernel = np.zeros(count)
    kernel[: taps + 1] += scale_alpha * gl_weights(model.alpha, taps + 1)
    if model.a2 != 0.0:
        kernel[: taps + 1] += scale_beta * gl_weights(model.beta, taps + 1)
    kernel[0] += model.a3
    return kernel


def simulate(
    model: FractionalModel,
    input="step",
    step: float = 0.05,
    horizon: float = 10.0,
    memory_length=None,
) -> SampledSignal:
    """Response of ``model`` to ``input`` at times ``0, step, ..., horizon``.

    ``memory_length`` (seconds) truncates the history sums; the default keeps
    the full history within the horizon.
    """
    if not (math.isfinite(step) and step > 0):
        raise ValueError(f"step must be positive, got {step!r}")
    if not horizon >= step * (1 - 1e-12):
        raise ValueError(f"horizon {horizon!r} is shorter than the step {step!r}")
    count = int(math.floor(horizon / step * (1 + 1e-12))) + 1
    r = input_samples(input, step, count)
    kernel = operator_kernel(model, step, count, memory_length)
    denominator = kernel[0]
    if denominator == 0.0 or not math.isfinite(denominator):
        raise SimulationError(
            f"implicit denominator a1*h^-alpha + a2*h^-beta + a3 = {denominator!r} for {model}"
        )
    # direct-form recursion: c_k = (r_k - sum_{j>=1} g_j c_{k-j}) / g_0
    c = lfilter([1.0], kernel, r)
    if not np.all(np.isfinite(c)):
        raise SimulationError(f"non-finite response for {model} at step {step!r}")
    return SampledSignal(0.0, step, c)


def downsample(signal: SampledSignal, target_period: float) -> SampledSignal:
    """Keep every ``target_period / period``-th sample, starting at index 0."""
    ratio = target_period / signal.period
    stride = int(round(ratio))
    if stride < 1 or abs(ratio - stride) > 1e-9 * ratio:
        raise ValueError(
            f"target period {target_period!r} is not an integer multiple of {signal.period!r}"
        )
    return SampledSignal(signal.start_time, float(target_period), signal.samples[::stride])
