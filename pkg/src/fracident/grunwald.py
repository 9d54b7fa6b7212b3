r"""Grünwald-Letnikov weights and differintegrals of sampled signals.

The differintegral of order :math:`q` (a derivative for ``q > 0``, the
identity for ``q = 0`` and a repeated integral for ``q < 0``) is approximated
on a uniform grid with step :math:`h` by

.. math::

    D^q x(t_k) \approx h^{-q} \sum_{j=0}^{\min(k, M)} b_j\, x(t_{k-j}),
    \qquad b_0 = 1,\quad b_j = \Bigl(1 - \frac{1 + q}{j}\Bigr) b_{j-1},

where :math:`M = \lfloor L / h \rfloor` is the number of memory taps for a
memory window of ``L`` seconds. History before the first sample is zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .signals import SampledSignal

__all__ = [
    "GlCoefficients",
    "gl_coefficients",
    "gl_weights",
    "memory_taps",
    "gl_differint",
    "gl_differint_at",
]


@dataclass(frozen=True)
class GlCoefficients:
    """Weights ``b_0 .. b_{N-1}`` of a differintegral of the given order."""

    order: float
    values: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return self.values.size


@lru_cache(maxsize=512)
def _cached_weights(order: float, count: int) -> np.ndarray:
    factors = np.empty(count)
    factors[0] = 1.0
    j = np.arange(1, count, dtype=np.float64)
    factors[1:] = 1.0 - (1.0 + order) / j
    # cumprod multiplies left to right, i.e. exactly the recursion b_j = f_j * b_{j-1}
    values = np.cumprod(factors)
    values.setflags(write=False)
    return values


def gl_weights(order: float, count: int) -> np.ndarray:
    """Read-only array of the first ``count`` weights (cached per order and count)."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    return _cached_weights(float(order), int(count))


def gl_coefficients(order: float, count: int) -> GlCoefficients:
    """Grünwald-Letnikov weights ``b_0 .. b_{count-1}`` for ``order``.

    >>> gl_coefficients(0.5, 4).values.tolist()
    [1.0, -0.5, -0.125, -0.0625]
    """
    return GlCoefficients(float(order), gl_weights(order, count))


def memory_taps(memory_length: float, period: float) -> int:
    """Number of past samples ``floor(L / T)`` spanned by a memory window."""
    if not memory_length > 0:
        raise ValueError(f"memory_length must be positive, got {memory_length!r}")
    ratio = memory_length / period
    # guard against 10 / 0.001 -> 9999.999...
    return int(math.floor(ratio * (1 + 1e-12)))


def gl_differint(signal: SampledSignal, order: float, memory_length: float) -> SampledSignal:
    """Differintegral of ``signal`` of real ``order`` with a finite memory window.

    ``memory_length`` is in seconds and must cover at least one period.
    A window at least as long as the signal gives the full-memory result.
    """
    if not memory_length >= signal.period * (1 - 1e-12):
        raise ValueError(
            f"memory_length {memory_length!r} is shorter than the sampling period {signal.period!r}"
        )
    x = signal.samples
    n = x.size
    if n == 0:
        raise ValueError("signal has no samples")
    taps = min(memory_taps(memory_length, signal.period), n - 1)
    b = gl_weights(order, taps + 1)
    out = np.convolve(x, b)[:n]
    if order != 0:
        out = out * signal.period ** (-order)
    return signal.with_samples(out)


def gl_differint_at(signal: SampledSignal, order: float, memory_length: float, index: int) -> float:
    """Single sample ``index`` of :func:`gl_differint` without forming the whole output."""
    if not memory_length >= signal.period * (1 - 1e-12):
        raise ValueError(
            f"memory_length {memory_length!r} is shorter than the sampling period {signal.period!r}"
        )
    n = len(signal)
    if not 0 <= index < n:
        raise IndexError(f"index {index} outside signal of length {n}")
    taps = min(memory_taps(memory_length, signal.period), index)
    b = gl_weights(order, taps + 1)
    window = signal.samples[index - taps : index + 1][::-1]
    return float(np.dot(b, window)) * signal.period ** (-order)
