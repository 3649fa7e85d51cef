"""Spatial grids, grid wavefunctions, kernel matrices and potentials."""

import warnings
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Any, Self

import numpy as np
from numpy.typing import ArrayLike, NDArray

from pathint.core.errors import GridTruncationWarning, PotentialBoundViolation

type FloatArray = NDArray[np.float64]
type ComplexArray = NDArray[np.complex128]


@dataclass(frozen=True, slots=True)
class SpatialGrid:
    """Uniform grid on `[x_min, x_max]` with trapezoid weights."""

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self) -> None:
        """Validate the grid."""
        if self.n_points < 2 or not self.x_max > self.x_min:
            raise ValueError("SpatialGrid needs x_max > x_min and n_points >= 2")

    @property
    def spacing(self) -> float:
        """Node spacing."""
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def nodes(self) -> FloatArray:
        """Node positions."""
        return np.linspace(self.x_min, self.x_max, self.n_points)

    @property
    def weights(self) -> FloatArray:
        """Trapezoid weights."""
        weights = np.full(self.n_points, self.spacing)
        weights[[0, -1]] *= 0.5
        return weights

    def index_of(self, x: float) -> int:
        """Return the index of the node closest to `x`."""
        return int(np.argmin(np.abs(self.nodes - x)))


@dataclass(frozen=True, slots=True, eq=False)
class WavefunctionGrid:
    """Complex (or real) samples of a function on a `SpatialGrid`."""

    grid: SpatialGrid
    values: ComplexArray

    def __post_init__(self) -> None:
        """Check the shape and finiteness."""
        values = np.asarray(self.values)
        if values.shape != (self.grid.n_points,):
            raise ValueError("WavefunctionGrid needs one value per grid node")
        if not np.all(np.isfinite(values)):
            raise ValueError("WavefunctionGrid values must be finite")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, grid: SpatialGrid, fn: Any) -> Self:
        """Sample `fn` on the grid nodes."""
        return cls(grid, np.asarray(fn(grid.nodes)))

    def norm(self) -> float:
        """Return the L2 norm by the trapezoid rule."""
        return float(np.sqrt(np.sum(self.grid.weights * np.abs(self.values) ** 2)))

    def mass(self) -> complex:
        """Return the integral of the values."""
        return complex(np.sum(self.grid.weights * self.values))


@dataclass(frozen=True, slots=True, eq=False)
class KernelMatrix:
    """Kernel values `K(x_i, x_j)` on a grid plus how they were produced."""

    grid: SpatialGrid
    values: ComplexArray
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        """Check shape and finiteness."""
        shape = (self.grid.n_points, self.grid.n_points)
        if self.values.shape != shape:
            raise ValueError(f"KernelMatrix must be {shape}, got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("KernelMatrix entries must be finite")

    def at(self, x_out: float, x_in: float) -> complex:
        """Return the entry at the nodes closest to the given positions."""
        return complex(self.values[self.grid.index_of(x_out), self.grid.index_of(x_in)])

    def apply(self, psi: WavefunctionGrid) -> WavefunctionGrid:
        """Return `int K(x, y) psi(y) dy` by grid quadrature."""
        if psi.grid != self.grid:
            raise ValueError("Kernel and wavefunction live on different grids")
        weighted = self.grid.weights * psi.values
        return WavefunctionGrid(self.grid, self.values @ weighted)


def check_grid_truncation(kernel: KernelMatrix, *, threshold: float = 1e-6) -> float:
    """Warn when boundary rows carry amplitude from the inner half of the grid.

    Returns:
        float: Boundary amplitude relative to the kernel maximum.
    """
    n = kernel.grid.n_points
    inner = slice(n // 4, n - n // 4)
    magnitude = np.abs(kernel.values)
    peak = float(magnitude.max())
    if peak == 0:
        return 0.0
    boundary = max(
        float(magnitude[0, inner].max()), float(magnitude[-1, inner].max())
    )
    ratio = boundary / peak
    if ratio > threshold:
        warnings.warn(
            f"Kernel amplitude at the grid boundary is {ratio:.2e} of the maximum",
            GridTruncationWarning,
            stacklevel=2,
        )
    return ratio


class PotentialKind(StrEnum):
    """Supported potential families."""

    ZERO = "zero"
    CONSTANT = "constant"
    LINEAR = "linear"
    QUADRATIC = "quadratic"
    TABULATED = "tabulated"


@dataclass(frozen=True, slots=True, eq=False)
class PotentialSpec:
    """A potential `V(x)` with a declared lower bound.

    Polynomial kinds store `coefficients` in increasing powers of x; tabulated
    potentials store `(x, V)` samples and interpolate linearly, clamping to
    the end values outside the table.
    """

    kind: PotentialKind
    coefficients: tuple[float, ...] = ()
    table_x: tuple[float, ...] = ()
    table_v: tuple[float, ...] = ()
    lower_bound: float = float("-inf")

    def __post_init__(self) -> None:
        """Check the coefficients against the kind and the declared bound."""
        degree = {
            PotentialKind.ZERO: -1,
            PotentialKind.CONSTANT: 0,
            PotentialKind.LINEAR: 1,
            PotentialKind.QUADRATIC: 2,
        }
        if self.kind is PotentialKind.TABULATED:
            if len(self.table_x) < 2 or len(self.table_x) != len(self.table_v):
                raise ValueError("Tabulated potential needs matching x and V columns")
            if np.any(np.diff(self.table_x) <= 0):
                raise ValueError("Tabulated potential x column must increase")
            if min(self.table_v) < self.lower_bound:
                raise PotentialBoundViolation(
                    f"Tabulated potential dips to {min(self.table_v)} below "
                    f"declared bound {self.lower_bound}"
                )
            return
        if len(self.coefficients) > degree[self.kind] + 1:
            raise ValueError(f"Too many coefficients for a {self.kind} potential")
        if self.polynomial_minimum() < self.lower_bound - 1e-12:
            raise PotentialBoundViolation(
                f"{self.kind} potential is not bounded below by {self.lower_bound}"
            )

    @classmethod
    def zero(cls) -> Self:
        """V = 0."""
        return cls(PotentialKind.ZERO, lower_bound=0.0)

    @classmethod
    def constant(cls, c: float) -> Self:
        """V = c."""
        return cls(PotentialKind.CONSTANT, (float(c),), lower_bound=float(c))

    @classmethod
    def linear(cls, c0: float, c1: float) -> Self:
        """V = c0 + c1 x (unbounded below unless c1 = 0)."""
        return cls(PotentialKind.LINEAR, (float(c0), float(c1)))

    @classmethod
    def quadratic(cls, c0: float, c1: float, c2: float) -> Self:
        """V = c0 + c1 x + c2 x^2."""
        coefficients = (float(c0), float(c1), float(c2))
        bound = cls(PotentialKind.QUADRATIC, coefficients).polynomial_minimum()
        return cls(PotentialKind.QUADRATIC, coefficients, lower_bound=bound)

    @classmethod
    def harmonic(cls, omega: float = 1.0, mass: float = 1.0) -> Self:
        """V = m omega^2 x^2 / 2."""
        return cls.quadratic(0.0, 0.0, 0.5 * mass * omega**2)

    @classmethod
    def tabulated(
        cls, x: Sequence[float], v: Sequence[float], lower_bound: float | None = None
    ) -> Self:
        """Linearly interpolated table."""
        bound = min(v) if lower_bound is None else lower_bound
        return cls(
            PotentialKind.TABULATED,
            table_x=tuple(map(float, x)),
            table_v=tuple(map(float, v)),
            lower_bound=bound,
        )

    @property
    def polynomial(self) -> tuple[float, float, float]:
        """Return `(c0, c1, c2)` of a polynomial kind."""
        if self.kind is PotentialKind.TABULATED:
            raise ValueError("Tabulated potentials have no polynomial form")
        padded = (*self.coefficients, 0.0, 0.0, 0.0)
        return padded[0], padded[1], padded[2]

    @property
    def is_constant(self) -> bool:
        """True for zero and constant potentials."""
        return self.kind in (PotentialKind.ZERO, PotentialKind.CONSTANT) or (
            self.kind is not PotentialKind.TABULATED and not any(self.polynomial[1:])
        )

    def polynomial_minimum(self) -> float:
        """Infimum over the real line of a polynomial kind."""
        c0, c1, c2 = self.polynomial
        if c2 > 0:
            return c0 - c1 * c1 / (4.0 * c2)
        if c2 == 0 and c1 == 0:
            return c0
        return float("-inf")

    def __call__(self, x: ArrayLike) -> FloatArray:
        """Evaluate the potential."""
        xs = np.asarray(x, dtype=float)
        if self.kind is PotentialKind.TABULATED:
            return np.interp(xs, self.table_x, self.table_v)
        c0, c1, c2 = self.polynomial
        return c0 + xs * (c1 + xs * c2)

    def check_bounded(self, grid: SpatialGrid) -> None:
        """Raise when the potential is below its bound somewhere on the grid.

        Raises:
            PotentialBoundViolation: If `V < lower_bound` on a grid node.
        """
        values = self(grid.nodes)
        if np.any(values < self.lower_bound - 1e-12):
            raise PotentialBoundViolation(
                f"Potential reaches {values.min()} below bound {self.lower_bound}"
            )
