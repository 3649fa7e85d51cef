"""Complex amplitudes, time lattices and closed-form Gaussian kernel algebra."""

import cmath
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Self

import numpy as np
from numpy.typing import ArrayLike, NDArray

from pathint.core.errors import CompositionDiverges

type ComplexArray = NDArray[np.complex128]


class Unit(StrEnum):
    """Unit annotation carried by amplitudes."""

    DIMENSIONLESS = "1"
    INVERSE_LENGTH = "length^-1"
    INVERSE_MOMENTUM = "momentum^-1"
    INVERSE_SQRT_LENGTH = "length^-1/2"


@dataclass(frozen=True, slots=True)
class ComplexAmplitude:
    """A finite complex number tagged with its unit."""

    value: complex
    unit: Unit = Unit.DIMENSIONLESS

    def __post_init__(self) -> None:
        """Coerce the value to `complex` and reject non-finite components."""
        value = complex(self.value)
        if not cmath.isfinite(value):
            raise ValueError(f"Amplitude must be finite, got {value!r}")
        object.__setattr__(self, "value", value)

    @property
    def re(self) -> float:
        """Real part."""
        return self.value.real

    @property
    def im(self) -> float:
        """Imaginary part."""
        return self.value.imag

    @property
    def modulus(self) -> float:
        """Absolute value."""
        return abs(self.value)

    @property
    def phase(self) -> float:
        """Argument in (-pi, pi]."""
        return cmath.phase(self.value)

    def __complex__(self) -> complex:
        return self.value

    def __abs__(self) -> float:
        return abs(self.value)

    def __neg__(self) -> ComplexAmplitude:
        return ComplexAmplitude(-self.value, self.unit)

    def _combine_unit(self, other: ComplexAmplitude) -> Unit:
        if other.unit is Unit.DIMENSIONLESS:
            return self.unit
        if self.unit is Unit.DIMENSIONLESS:
            return other.unit
        raise ValueError(f"Cannot combine units {self.unit} and {other.unit}")

    def __add__(self, other: ComplexAmplitude) -> ComplexAmplitude:
        if not isinstance(other, ComplexAmplitude):
            return NotImplemented
        if other.unit is not self.unit:
            raise ValueError(f"Unit mismatch: {self.unit} + {other.unit}")
        return ComplexAmplitude(self.value + other.value, self.unit)

    def __sub__(self, other: ComplexAmplitude) -> ComplexAmplitude:
        if not isinstance(other, ComplexAmplitude):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other: ComplexAmplitude | complex | float) -> ComplexAmplitude:
        if isinstance(other, ComplexAmplitude):
            return ComplexAmplitude(self.value * other.value, self._combine_unit(other))
        if isinstance(other, (int, float, complex)):
            return ComplexAmplitude(self.value * other, self.unit)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other: complex | float) -> ComplexAmplitude:
        if isinstance(other, (int, float, complex)):
            return ComplexAmplitude(self.value / other, self.unit)
        return NotImplemented

    def relative_error(self, reference: complex | ComplexAmplitude) -> float:
        """Return |self - reference| / |reference|."""
        ref = complex(reference)
        if ref == 0:
            return abs(self.value)
        return abs(self.value - ref) / abs(ref)


def principal_sqrt(z: complex) -> complex:
    """Principal square root (Re >= 0, cut on the negative real axis)."""
    return cmath.sqrt(z)


@dataclass(frozen=True, slots=True)
class TimeLattice:
    """Uniform time lattice with `n` interior integration points.

    The endpoints are pinned; there are `n + 1` links of width `eps`.
    """

    t_start: float
    t_end: float
    n: int

    def __post_init__(self) -> None:
        """Validate the lattice."""
        if not self.t_end > self.t_start:
            raise ValueError("TimeLattice needs t_end > t_start")
        if self.n < 1:
            raise ValueError("TimeLattice needs at least one interior point")

    @classmethod
    def from_duration(cls, duration: float, n: int) -> Self:
        """Build a lattice on `[0, duration]`."""
        return cls(0.0, float(duration), int(n))

    @property
    def duration(self) -> float:
        """Total time `t_end - t_start`."""
        return self.t_end - self.t_start

    @property
    def eps(self) -> float:
        """Link width."""
        return self.duration / (self.n + 1)

    @property
    def n_links(self) -> int:
        """Number of links `n + 1`."""
        return self.n + 1

    def times(self) -> NDArray[np.float64]:
        """Return the `n + 2` node times, endpoints included."""
        return self.t_start + self.eps * np.arange(self.n + 2, dtype=float)

    def refined(self, factor: int = 2) -> TimeLattice:
        """Return the lattice with `factor` times as many interior points."""
        return TimeLattice(self.t_start, self.t_end, self.n * factor)


@dataclass(slots=True)
class QuadraticExpression:
    """Complex polynomial `z^T M z + l.z + c` of degree at most two."""

    matrix: ComplexArray
    linear: ComplexArray
    constant: complex = 0j

    @classmethod
    def zero(cls, n_vars: int) -> Self:
        """Return the zero polynomial in `n_vars` variables."""
        return cls(
            np.zeros((n_vars, n_vars), dtype=complex), np.zeros(n_vars, dtype=complex)
        )

    @classmethod
    def linear_form(cls, coefficients: ArrayLike, constant: complex = 0j) -> Self:
        """Return the affine form `coefficients . z + constant`."""
        vector = np.asarray(coefficients, dtype=complex)
        return cls(
            np.zeros((vector.size, vector.size), dtype=complex),
            vector.copy(),
            complex(constant),
        )

    @property
    def n_vars(self) -> int:
        """Number of variables."""
        return self.linear.size

    @property
    def is_affine(self) -> bool:
        """True when the quadratic part vanishes."""
        return not np.any(self.matrix)

    def __add__(self, other: QuadraticExpression | complex | float) -> Self:
        if isinstance(other, QuadraticExpression):
            return type(self)(
                self.matrix + other.matrix,
                self.linear + other.linear,
                self.constant + other.constant,
            )
        return type(self)(self.matrix.copy(), self.linear.copy(), self.constant + other)

    __radd__ = __add__

    def __mul__(self, other: QuadraticExpression | complex | float) -> Self:
        if not isinstance(other, QuadraticExpression):
            return type(self)(
                self.matrix * other, self.linear * other, self.constant * other
            )
        if self.is_affine and other.is_affine:
            outer = np.outer(self.linear, other.linear)
            return type(self)(
                0.5 * (outer + outer.T),
                self.constant * other.linear + other.constant * self.linear,
                self.constant * other.constant,
            )
        if self.is_affine and not np.any(self.linear):
            return other * self.constant
        if other.is_affine and not np.any(other.linear):
            return self * other.constant
        raise ValueError("Product would exceed degree two")

    __rmul__ = __mul__

    def __neg__(self) -> Self:
        return self * -1.0

    def __sub__(self, other: QuadraticExpression | complex | float) -> Self:
        return self + (-other if isinstance(other, QuadraticExpression) else -other)

    def __call__(self, z: ArrayLike) -> ComplexArray:
        """Evaluate on points `z` of shape `(..., n_vars)`."""
        points = np.asarray(z, dtype=complex)
        quad = np.einsum("...i,ij,...j->...", points, self.matrix, points)
        return quad + points @ self.linear + self.constant


@dataclass(frozen=True, slots=True, eq=False)
class GaussianKernel:
    """Kernel `prefactor * exp(z^T form z + linear . z)` with `z = (x_out, x_in)`.

    For `dim == 1` the form is stored symmetrically, so the usual coefficients
    of `a x''^2 + b x'' x' + c x'^2` are `form[0, 0]`, `2 form[0, 1]` and
    `form[1, 1]`. For `dim == 2` the variables are `(p'', q'', p', q')`.
    """

    prefactor: complex
    form: ComplexArray
    linear: ComplexArray = field(default_factory=lambda: np.zeros(2, dtype=complex))
    unit: Unit = Unit.DIMENSIONLESS

    def __post_init__(self) -> None:
        """Normalize array types and validate shapes."""
        form = np.asarray(self.form, dtype=complex)
        if form.ndim != 2 or form.shape[0] != form.shape[1] or form.shape[0] % 2:
            raise ValueError(f"Kernel form must be square of even size: {form.shape}")
        linear = np.asarray(self.linear, dtype=complex)
        if linear.size == 2 and form.shape[0] != 2 and not np.any(linear):
            linear = np.zeros(form.shape[0], dtype=complex)
        if linear.shape != (form.shape[0],):
            raise ValueError("Kernel linear term does not match its form")
        object.__setattr__(self, "form", 0.5 * (form + form.T))
        object.__setattr__(self, "linear", linear)
        object.__setattr__(self, "prefactor", complex(self.prefactor))

    @classmethod
    def from_coefficients(
        cls,
        prefactor: complex,
        a: complex,
        b: complex,
        c: complex,
        *,
        linear: Sequence[complex] = (0, 0),
        unit: Unit = Unit.DIMENSIONLESS,
    ) -> Self:
        """Build a 1-D kernel `prefactor * exp(a x''^2 + b x'' x' + c x'^2 + ...)`."""
        form = np.array([[a, b / 2], [b / 2, c]], dtype=complex)
        return cls(prefactor, form, np.asarray(linear, dtype=complex), unit)

    @classmethod
    def from_expression(
        cls,
        prefactor: complex,
        expression: QuadraticExpression,
        *,
        unit: Unit = Unit.DIMENSIONLESS,
    ) -> Self:
        """Build a kernel whose exponent is `expression`."""
        return cls(
            prefactor * cmath.exp(expression.constant),
            expression.matrix,
            expression.linear,
            unit,
        )

    @property
    def dim(self) -> int:
        """Number of variables on each side."""
        return self.form.shape[0] // 2

    @property
    def coefficients(self) -> tuple[complex, complex, complex]:
        """Return `(a, b, c)` of a 1-D kernel."""
        if self.dim != 1:
            raise ValueError("Coefficients are only defined for 1-D kernels")
        return (
            complex(self.form[0, 0]),
            complex(2 * self.form[0, 1]),
            complex(self.form[1, 1]),
        )

    def scaled(self, factor: complex) -> GaussianKernel:
        """Return the kernel multiplied by a constant."""
        return GaussianKernel(
            self.prefactor * factor, self.form, self.linear, self.unit
        )

    def exponent(self, x_out: ArrayLike, x_in: ArrayLike) -> ComplexArray:
        """Return the exponent at the given points (broadcasting)."""
        out = np.asarray(x_out, dtype=complex)
        inp = np.asarray(x_in, dtype=complex)
        if self.dim == 1:
            out = out[..., np.newaxis]
            inp = inp[..., np.newaxis]
        out, inp = np.broadcast_arrays(out, inp)
        z = np.concatenate([out, inp], axis=-1)
        quad = np.einsum("...i,ij,...j->...", z, self.form, z)
        return quad + z @ self.linear

    def __call__(self, x_out: ArrayLike, x_in: ArrayLike) -> ComplexArray:
        """Evaluate the kernel; 1-D kernels take scalars or arrays of positions."""
        return self.prefactor * np.exp(self.exponent(x_out, x_in))

    def amplitude(self, x_out: ArrayLike, x_in: ArrayLike) -> ComplexAmplitude:
        """Evaluate at a single pair of points."""
        return ComplexAmplitude(complex(self(x_out, x_in)), self.unit)


def _sqrt_det(matrix: ComplexArray) -> complex:
    """Branch of sqrt(det A) continuous from positive-definite real part."""
    eigenvalues = np.linalg.eigvals(matrix)
    return complex(np.prod(np.sqrt(eigenvalues.astype(complex))))


def compose_gaussian(
    k1: GaussianKernel, k2: GaussianKernel, *, measure: float = 1.0
) -> GaussianKernel:
    """Integrate out the shared variable of two Gaussian kernels.

    Returns `K(x'', x') = measure * int k1(x'', y) k2(y, x') dy` in closed form.
    Purely oscillatory directions (real part zero, imaginary part non-zero) are
    accepted as Fresnel integrals.

    Args:
        k1 (GaussianKernel): Later kernel, `k1(x'', y)`.
        k2 (GaussianKernel): Earlier kernel, `k2(y, x')`.
        measure (float): Constant weight of the integration measure per variable
            block, e.g. `1 / (2 pi hbar)` for phase-space integrations.

    Returns:
        GaussianKernel: The composed kernel.

    Raises:
        CompositionDiverges: If the Gaussian integral over `y` does not converge.
    """
    if k1.dim != k2.dim:
        raise ValueError(f"Kernel dimensions differ: {k1.dim} != {k2.dim}")
    d = k1.dim
    a1, b1, c1 = k1.form[:d, :d], k1.form[:d, d:], k1.form[d:, d:]
    a2, b2, c2 = k2.form[:d, :d], k2.form[:d, d:], k2.form[d:, d:]
    s = c1 + a2
    scale = max(1.0, float(np.max(np.abs(s))))
    real_part = np.linalg.eigvalsh(0.5 * (s.real + s.real.T))
    if real_part.max() > 1e-12 * scale:
        raise CompositionDiverges(
            f"Integration block has positive real part (max eigenvalue "
            f"{real_part.max():.3e})"
        )
    if abs(np.linalg.det(s)) <= 1e-300 or np.linalg.cond(s) > 1e14:
        raise CompositionDiverges("Integration block is singular")

    g = np.concatenate([b1.T, b2], axis=1)
    h = 0.5 * (k1.linear[d:] + k2.linear[:d])
    s_inv_g = np.linalg.solve(s, g)
    s_inv_h = np.linalg.solve(s, h)

    form = np.zeros((2 * d, 2 * d), dtype=complex)
    form[:d, :d] = a1
    form[d:, d:] = c2
    form -= g.T @ s_inv_g
    linear = np.concatenate([k1.linear[:d], k2.linear[d:]]) - 2.0 * (g.T @ s_inv_h)
    gauss = math.pi ** (d / 2) / _sqrt_det(-s) * cmath.exp(-complex(h @ s_inv_h))
    return GaussianKernel(
        k1.prefactor * k2.prefactor * measure * gauss, form, linear, k1.unit
    )


def compose_chain(
    kernels: Sequence[GaussianKernel], *, measure: float = 1.0
) -> GaussianKernel:
    """Compose `kernels[0] o kernels[1] o ...` by balanced pairwise reduction.

    The first kernel is the latest link, matching `compose_gaussian`.

    Raises:
        CompositionDiverges: Propagated from `compose_gaussian`.
    """
    if not kernels:
        raise ValueError("Need at least one kernel")
    layer = list(kernels)
    while len(layer) > 1:
        merged = [
            compose_gaussian(layer[i], layer[i + 1], measure=measure)
            for i in range(0, len(layer) - 1, 2)
        ]
        if len(layer) % 2:
            merged.append(layer[-1])
        layer = merged
    return layer[0]


def compose_power(
    kernel: GaussianKernel, n_links: int, *, measure: float = 1.0
) -> GaussianKernel:
    """Compose `n_links` copies of the same kernel by binary powering.

    Raises:
        CompositionDiverges: Propagated from `compose_gaussian`.
    """
    if n_links < 1:
        raise ValueError("n_links must be positive")
    result: GaussianKernel | None = None
    base = kernel
    remaining = n_links
    while remaining:
        if remaining & 1:
            result = (
                base
                if result is None
                else compose_gaussian(result, base, measure=measure)
            )
        remaining >>= 1
        if remaining:
            base = compose_gaussian(base, base, measure=measure)
    assert result is not None
    return result
