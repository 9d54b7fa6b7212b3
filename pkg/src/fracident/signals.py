"""Uniformly sampled signals."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SampledSignal:
    """A real-valued series sampled every ``period`` seconds.

    Sample ``k`` belongs to time ``start_time + k * period``. The samples are
    stored as a read-only float64 array.
    """

    start_time: float
    period: float
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not (np.isfinite(self.period) and self.period > 0):
            raise ValueError(f"period must be positive and finite, got {self.period!r}")
        if not np.isfinite(self.start_time):
            raise ValueError(f"start_time must be finite, got {self.start_time!r}")
        arr = np.array(self.samples, dtype=np.float64).reshape(-1)
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "period", float(self.period))
        object.__setattr__(self, "start_time", float(self.start_time))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def times(self) -> np.ndarray:
        return self.start_time + self.period * np.arange(self.samples.size)

    @property
    def end_time(self) -> float:
        return self.start_time + self.period * (self.samples.size - 1)

    def index_of(self, t: float, rtol: float = 1e-9) -> int:
        """Index of the sample at time ``t``; raises if ``t`` is off-grid."""
        pos = (t - self.start_time) / self.period
        k = int(round(pos))
        if abs(pos - k) > rtol * max(1.0, abs(pos)) or not 0 <= k < self.samples.size:
            raise ValueError(f"time {t!r} is not a sample instant of this signal")
        return k

    def with_samples(self, samples) -> "SampledSignal":
        return SampledSignal(self.start_time, self.period, samples)
