"""Free-particle propagator under the higher-derivative continuous-time regulator.

The regulator turns the velocity into an Ornstein-Uhlenbeck process with the
complex rate `a = sqrt(1 - i m nu / hbar)`; everything here is closed form.
"""

import cmath
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from logging import getLogger
from typing import Self

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import simpson
from scipy.stats import linregress

from pathint.core.errors import TailUnbounded
from pathint.core.numerics import ComplexAmplitude, Unit, principal_sqrt
from pathint.oracles.closed_form import free_propagator

log = getLogger(__name__)

SERIES_THRESHOLD = 0.5
INADMISSIBLE_EXPONENT = 1.05


@dataclass(frozen=True, slots=True)
class ItoSpec:
    """Pinned free particle with `x(0) = 0` and `x(T) = x`."""

    nu: float
    m: float = 1.0
    hbar: float = 1.0
    T: float = 1.0
    x: float = 0.0

    def __post_init__(self) -> None:
        """Validate the physical parameters."""
        for name in ("nu", "m", "hbar", "T"):
            if not getattr(self, name) > 0:
                raise ValueError(f"ItoSpec.{name} must be positive")

    @property
    def a(self) -> complex:
        """OU rate on the principal branch; `Re a > 0` for every `nu > 0`."""
        return principal_sqrt(1 - 1j * self.m * self.nu / self.hbar)


@dataclass(frozen=True, slots=True)
class PiecewiseConstantSource:
    """Source `g(t) = values[k]` on `[breakpoints[k], breakpoints[k + 1])`.

    The source vanishes outside the breakpoints.
    """

    breakpoints: tuple[float, ...]
    values: tuple[complex, ...]

    def __post_init__(self) -> None:
        """Check piece counts and ordering."""
        if len(self.breakpoints) != len(self.values) + 1:
            raise ValueError("Need one more breakpoint than values")
        if len(self.values) == 0:
            raise ValueError("Need at least one piece")
        edges = self.breakpoints
        if any(b <= a for a, b in zip(edges, edges[1:], strict=False)):
            raise ValueError("Breakpoints must increase strictly")

    @classmethod
    def constant(cls, value: complex, T: float) -> Self:
        """`g = value` on `[0, T]`."""
        return cls((0.0, float(T)), (value,))

    @classmethod
    def zero(cls, T: float = 1.0) -> Self:
        """The vanishing source."""
        return cls.constant(0.0, T)

    def __call__(self, t: ArrayLike) -> NDArray[np.complex128]:
        """Evaluate the source."""
        times = np.asarray(t, dtype=float)
        index = np.searchsorted(self.breakpoints, times, side="right") - 1
        inside = (index >= 0) & (index < len(self.values))
        table = np.asarray(self.values, dtype=complex)
        return np.where(inside, table[np.clip(index, 0, len(self.values) - 1)], 0)

    def __add__(self, other: PiecewiseConstantSource) -> PiecewiseConstantSource:
        """Sum on the common refinement of both breakpoint sets."""
        points = sorted(set(self.breakpoints) | set(other.breakpoints))
        mids = [(a + b) / 2 for a, b in zip(points, points[1:], strict=False)]
        values = tuple(complex(self(t) + other(t)) for t in mids)
        return PiecewiseConstantSource(tuple(points), values)


def f_factor(a: complex, T: float) -> ComplexAmplitude:
    """`F = int_0^T int_0^T exp(-a |t - u|) dt du = 2T/a - (2/a^2)(1 - exp(-aT))`.

    Small `|aT|` uses the series `2 sum_k (-a)^k T^(k+2) / (k+2)!`.

    Raises:
        ValueError: If `T <= 0`.
    """
    if T <= 0:
        raise ValueError("f_factor needs T > 0")
    a = complex(a)
    if abs(a * T) < SERIES_THRESHOLD:
        term = T * T / 2
        total = 0j
        k = 0
        while abs(term) > 1e-18 * abs(total) or k < 2:
            total += term
            k += 1
            term *= -a * T / (k + 2)
        return ComplexAmplitude(2 * total)
    return ComplexAmplitude(2 * T / a + 2 * cmath.expm1(-a * T) / (a * a))


def _pair_integral(
    a: complex, left: tuple[float, float], right: tuple[float, float]
) -> complex:
    """`int_left int_right exp(-a (u - t)) du dt` for `left` entirely before `right`."""
    gap = right[0] - left[1]
    return (
        -cmath.expm1(-a * (left[1] - left[0]))
        * -cmath.expm1(-a * (right[1] - right[0]))
        * cmath.exp(-a * gap)
        / (a * a)
    )


def ou_double_integral(g: PiecewiseConstantSource, a: complex) -> complex:
    """`int int g(t) g(u) exp(-a |t - u|) dt du` piece by piece."""
    pieces = list(zip(g.breakpoints, g.breakpoints[1:], strict=False))
    total = 0j
    for j, (start, end) in enumerate(pieces):
        gj = g.values[j]
        if gj == 0:
            continue
        total += gj * gj * f_factor(a, end - start).value
        for k in range(j + 1, len(pieces)):
            if g.values[k] != 0:
                cross = _pair_integral(a, (start, end), pieces[k])
                total += 2 * gj * g.values[k] * cross
    return total


def ou_generating_functional(
    g: PiecewiseConstantSource, nu: float, a: complex, hbar: float = 1.0
) -> ComplexAmplitude:
    """`exp[-(nu / 4 a hbar^2) int int g(t) g(u) exp(-a |t - u|) dt du]`.

    Normalized to one for a vanishing source.

    Raises:
        ValueError: If `Re a <= 0`.
    """
    a = complex(a)
    if not a.real > 0:
        raise ValueError(f"OU rate needs Re(a) > 0, got {a}")
    exponent = -nu * ou_double_integral(g, a) / (4 * a * hbar**2)
    return ComplexAmplitude(cmath.exp(exponent))


def ito_exponent_scale(spec: ItoSpec) -> complex:
    """`a / (nu F)`, which tends to `-i m / (2 T hbar)` as `nu` grows."""
    a = spec.a
    return a / (spec.nu * f_factor(a, spec.T).value)


def ito_propagator(spec: ItoSpec) -> ComplexAmplitude:
    """`sqrt(a / (nu F pi)) exp(-a x^2 / (nu F))` on the principal branch."""
    scale = ito_exponent_scale(spec)
    value = principal_sqrt(scale / math.pi) * cmath.exp(-scale * spec.x**2)
    return ComplexAmplitude(value, Unit.INVERSE_LENGTH)


def ito_mass(spec: ItoSpec) -> complex:
    """Integral of `ito_propagator` over the final position, in closed form."""
    scale = ito_exponent_scale(spec)
    return principal_sqrt(scale / math.pi) * principal_sqrt(math.pi / scale)


@dataclass(frozen=True, slots=True)
class ItoLimitStudy:
    """Relative error against the free propagator along increasing `nu`."""

    rows: tuple[tuple[float, complex, float], ...]
    slope: float
    intercept: float

    @property
    def errors(self) -> list[float]:
        """Relative errors in row order."""
        return [row[2] for row in self.rows]

    @property
    def monotone(self) -> bool:
        """True when the error decreases strictly with `nu`."""
        errors = self.errors
        return all(b < a for a, b in zip(errors, errors[1:], strict=False))


def ito_limit_study(
    nu_list: Sequence[float],
    m: float = 1.0,
    hbar: float = 1.0,
    T: float = 1.0,
    x: float = 1.0,
) -> ItoLimitStudy:
    """Tabulate the approach to the free propagator and fit a power law in `nu`.

    Raises:
        ValueError: If `nu_list` is not strictly increasing or has fewer than
            two entries.
    """
    increasing = all(b > a for a, b in zip(nu_list, nu_list[1:], strict=False))
    if len(nu_list) < 2 or not increasing:
        raise ValueError("nu_list must increase strictly and hold at least two values")
    exact = free_propagator(x, 0.0, T, m, hbar)
    rows = []
    for nu in nu_list:
        value = ito_propagator(ItoSpec(nu, m, hbar, T, x))
        rows.append((float(nu), value.value, value.relative_error(exact)))
    fit = linregress(np.log([r[0] for r in rows]), np.log([r[2] for r in rows]))
    log.info("Ito limit slope %.3f over %d values of nu", fit.slope, len(rows))
    return ItoLimitStudy(tuple(rows), float(fit.slope), float(fit.intercept))


@dataclass(frozen=True, slots=True, eq=False)
class TabulatedFunction:
    """Samples of a real or complex function on an increasing grid."""

    s: NDArray[np.float64]
    values: NDArray

    def __post_init__(self) -> None:
        """Check the table."""
        s = np.asarray(self.s, dtype=float)
        values = np.asarray(self.values)
        if s.ndim != 1 or s.shape != values.shape or s.size < 5:
            raise ValueError("Table needs matching 1-D columns with at least 5 rows")
        if np.any(np.diff(s) <= 0):
            raise ValueError("Table abscissae must increase")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(
        cls, fn: Callable[[NDArray[np.float64]], ArrayLike], s_max: float, n_points: int
    ) -> Self:
        """Sample `fn` on a symmetric uniform grid `[-s_max, s_max]`."""
        s = np.linspace(-s_max, s_max, n_points)
        return cls(s, np.asarray(fn(s)))


@dataclass(frozen=True, slots=True)
class AdmissibilityReport:
    """Outcome of the `int |w(s)| ds < inf` test."""

    admissible: bool
    integral: float
    table_integral: float
    tail_bound: float
    decay_exponents: tuple[float, float]


def _tail(
    s: NDArray[np.float64], magnitude: NDArray[np.float64]
) -> tuple[float, float]:
    """Fit `|w| ~ C |s|^-k` on one outer half-table; return `(k, tail mass)`.

    Rows are ordered by increasing `|s|`.
    """
    positive = np.flatnonzero(magnitude > 0)
    if positive.size == 0:
        return math.inf, 0.0
    if positive.size < magnitude.size:
        if positive[-1] == magnitude.size - 1:
            raise TailUnbounded("Table tail vanishes and reappears")
        return math.inf, 0.0
    fit = linregress(np.log(np.abs(s)), np.log(magnitude))
    k = -float(fit.slope)
    if not math.isfinite(k) or k <= 0:
        raise TailUnbounded(f"Table does not decay at its edge (exponent {k:.3g})")
    if k <= INADMISSIBLE_EXPONENT:
        return k, math.inf
    return k, float(magnitude[-1] * abs(s[-1]) / (k - 1))


def fourier_potential_admissible(w: TabulatedFunction) -> AdmissibilityReport:
    """Decide whether a Fourier density has a finite absolute integral.

    The table is integrated by Simpson's rule; each tail beyond the table is
    bounded by a power law fitted to the outer half of that side.

    Raises:
        TailUnbounded: When decay cannot be established from the table.
    """
    magnitude = np.abs(w.values)
    if not np.all(np.isfinite(magnitude)):
        raise TailUnbounded("Table holds non-finite values")
    table_integral = float(simpson(magnitude, x=w.s))
    right = (w.s > 0) & (w.s >= w.s[-1] / 2)
    left = (w.s < 0) & (w.s <= w.s[0] / 2)
    exponents = []
    tail = 0.0
    for side in (left, right):
        if np.count_nonzero(side) < 3:
            raise TailUnbounded("Too few samples to bound the tail")
        order = np.argsort(np.abs(w.s[side]))
        k, mass = _tail(w.s[side][order], magnitude[side][order])
        exponents.append(k)
        tail += mass
    admissible = math.isfinite(tail)
    log.debug(
        "Admissibility table=%.6g tail=%.3g exponents=%s",
        table_integral,
        tail,
        exponents,
    )
    return AdmissibilityReport(
        admissible,
        table_integral + tail,
        table_integral,
        tail,
        (exponents[0], exponents[1]),
    )
