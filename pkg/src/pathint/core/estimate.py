"""Propagator estimates with provenance and deterministic sample statistics."""

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import ArrayLike

from pathint.core.numerics import ComplexAmplitude


@dataclass(frozen=True, slots=True)
class PropagatorEstimate:
    """A complex amplitude with its statistical error and provenance.

    `parameters` carries everything needed to reproduce the number: diffusion
    constant, lattice size, seed, stream range, sample count, fit model.
    """

    value: ComplexAmplitude
    stderr: float
    scheme: str
    parameters: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        """Validate the error bar."""
        if not math.isfinite(self.stderr) or self.stderr < 0:
            raise ValueError(f"stderr must be finite and non-negative: {self.stderr}")

    def to_dict(self) -> dict[str, Any]:
        """Return a JSON-ready mapping."""
        return {
            "scheme": self.scheme,
            "re": self.value.re,
            "im": self.value.im,
            "unit": str(self.value.unit),
            "stderr": self.stderr,
            "parameters": dict(self.parameters),
        }


@dataclass(slots=True)
class SampleStatistics:
    """Running mean and spread of complex samples, merged block by block.

    Blocks must be added in block order; the merge is then independent of
    which worker produced each block.
    """

    count: int = 0
    mean: complex = 0j
    m2: float = 0.0

    def add_block(self, samples: ArrayLike) -> None:
        """Merge one block of samples."""
        values = np.asarray(samples).ravel()
        if values.size == 0:
            return
        block_mean = complex(np.mean(values))
        block_m2 = float(np.sum(np.abs(values - block_mean) ** 2))
        if self.count == 0:
            self.count, self.mean, self.m2 = values.size, block_mean, block_m2
            return
        total = self.count + values.size
        delta = block_mean - self.mean
        self.mean += delta * values.size / total
        self.m2 += block_m2 + abs(delta) ** 2 * self.count * values.size / total
        self.count = total

    @property
    def stderr(self) -> float:
        """Standard error of the mean."""
        if self.count < 2:
            return 0.0
        return math.sqrt(self.m2 / (self.count - 1) / self.count)
