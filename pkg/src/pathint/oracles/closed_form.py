"""Closed-form and quadrature-defined propagators used as ground truth."""

import cmath
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from logging import getLogger

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.interpolate import CubicSpline
from scipy.linalg import eigh_tridiagonal
from scipy.special import hankel2, k1

from pathint.core.errors import QuadratureNotConverged
from pathint.core.numerics import ComplexAmplitude, GaussianKernel, Unit
from pathint.core.quadrature import Quadrature

log = getLogger(__name__)

DEFAULT_DAMPINGS: tuple[float, ...] = (0.1, 0.05, 0.025)
"""Damping parameters extrapolated to zero for conditionally convergent integrals."""

type EnergyFn = Callable[[NDArray[np.float64]], NDArray[np.float64]]


def _check_duration(T: float, *, positive: bool = True) -> None:
    if positive and not T > 0:
        raise ValueError(f"Duration must be positive, got {T}")
    if T == 0:
        raise ValueError("Duration must be non-zero")


def free_propagator(
    x2: float, x1: float, T: float, m: float = 1.0, hbar: float = 1.0
) -> ComplexAmplitude:
    """Free-particle propagator on the principal branch.

    Args:
        x2 (float): Final position.
        x1 (float): Initial position.
        T (float): Elapsed time, non-zero.
        m (float): Mass.
        hbar (float): Reduced Planck constant.

    Returns:
        ComplexAmplitude: `sqrt(m / (2 pi i hbar T)) exp(i m (x2-x1)^2 / (2 hbar T))`.

    Raises:
        ValueError: If `T == 0`.
    """
    _check_duration(T, positive=False)
    prefactor = cmath.sqrt(m / (2j * math.pi * hbar * T))
    phase = cmath.exp(1j * m * (x2 - x1) ** 2 / (2 * hbar * T))
    return ComplexAmplitude(prefactor * phase, Unit.INVERSE_LENGTH)


def free_kernel(T: float, m: float = 1.0, hbar: float = 1.0) -> GaussianKernel:
    """Free propagator as a composable Gaussian kernel."""
    _check_duration(T, positive=False)
    a = 1j * m / (2 * hbar * T)
    return GaussianKernel.from_coefficients(
        cmath.sqrt(m / (2j * math.pi * hbar * T)),
        a,
        -2 * a,
        a,
        unit=Unit.INVERSE_LENGTH,
    )


def heat_kernel(x: ArrayLike, y: ArrayLike, T: float, nu: float = 1.0) -> ArrayLike:
    """Fundamental solution of the diffusion equation with diffusion `nu`.

    Raises:
        ValueError: If `T <= 0` or `nu <= 0`.
    """
    _check_duration(T)
    if nu <= 0:
        raise ValueError("nu must be positive")
    dx = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    value = np.exp(-(dx**2) / (2 * nu * T)) / math.sqrt(2 * math.pi * nu * T)
    return float(value) if np.ndim(value) == 0 else value


def heat_gaussian_kernel(T: float, nu: float = 1.0) -> GaussianKernel:
    """Heat kernel as a composable Gaussian kernel."""
    _check_duration(T)
    a = -1.0 / (2 * nu * T)
    return GaussianKernel.from_coefficients(
        1.0 / math.sqrt(2 * math.pi * nu * T), a, -2 * a, a, unit=Unit.INVERSE_LENGTH
    )


def euclidean_oscillator_kernel(
    x: float, y: float, T: float, nu: float = 1.0, omega: float = 1.0
) -> float:
    """Imaginary-time kernel of `d/dt = (nu/2) d^2/dx^2 - omega^2 x^2 / (2 nu)`.

    Falls back to the heat kernel when `omega == 0`.

    Raises:
        ValueError: If `T <= 0`.
    """
    _check_duration(T)
    if omega == 0:
        return float(heat_kernel(x, y, T, nu))
    wt = omega * T
    scale = omega / nu
    prefactor = math.sqrt(scale / (2 * math.pi * math.sinh(wt)))
    exponent = -scale * ((x * x + y * y) * math.cosh(wt) - 2 * x * y) / (
        2 * math.sinh(wt)
    )
    return prefactor * math.exp(exponent)


def euclidean_oscillator_gaussian_kernel(
    T: float, nu: float = 1.0, omega: float = 1.0
) -> GaussianKernel:
    """Oscillator kernel from `euclidean_oscillator_kernel` as a Gaussian kernel."""
    _check_duration(T)
    if omega == 0:
        return heat_gaussian_kernel(T, nu)
    wt = omega * T
    scale = omega / nu
    a = -scale * math.cosh(wt) / (2 * math.sinh(wt))
    b = scale / math.sinh(wt)
    return GaussianKernel.from_coefficients(
        math.sqrt(scale / (2 * math.pi * math.sinh(wt))),
        a,
        b,
        a,
        unit=Unit.INVERSE_LENGTH,
    )


@dataclass(slots=True)
class TransferMatrixResult:
    """Outcome of the finite-difference oscillator derivation."""

    value: float
    n_points: int
    change: float


def euclidean_oscillator_transfer_matrix(
    x: float,
    y: float,
    T: float,
    nu: float = 1.0,
    omega: float = 1.0,
    *,
    tolerance: float = 1e-6,
    max_points: int = 6401,
) -> TransferMatrixResult:
    """Derive the oscillator kernel by diagonalizing a finite-difference generator.

    The generator `(nu/2) d^2/dx^2 - V` is discretized with second-order
    differences on a box wide enough for the Gaussian decay; the grid is
    refined by factors of two and successive Richardson values compared.

    Raises:
        QuadratureNotConverged: If refinement stalls before `max_points`.
    """
    _check_duration(T)
    width = max(abs(x), abs(y)) + 12.0 * math.sqrt(nu / max(omega, 1e-3))

    n_modes = math.ceil(45.0 / max(omega * T, 1e-3)) + 20

    def solve(n_points: int) -> float:
        nodes = np.linspace(-width, width, n_points)
        h = nodes[1] - nodes[0]
        potential = omega**2 * nodes**2 / (2 * nu)
        diagonal = nu / h**2 + potential
        off = np.full(n_points - 1, -nu / (2 * h**2))
        top = min(n_modes, n_points) - 1
        energies, vectors = eigh_tridiagonal(
            diagonal, off, select="i", select_range=(0, top)
        )
        modes = CubicSpline(nodes, vectors, axis=0)
        weights = np.exp(-T * energies)
        return float(np.sum(weights * modes(x) * modes(y)) / h)

    n_points = 401
    coarse = solve(n_points)
    previous: float | None = None
    while 2 * n_points - 1 <= max_points:
        n_points = 2 * n_points - 1
        fine = solve(n_points)
        extrapolated = (4 * fine - coarse) / 3
        if previous is not None:
            change = abs(extrapolated - previous)
            log.debug(
                "Transfer matrix n=%d value=%.12g change=%.3e",
                n_points,
                extrapolated,
                change,
            )
            if change <= tolerance * max(abs(extrapolated), 1e-300):
                return TransferMatrixResult(extrapolated, n_points, change)
        previous, coarse = extrapolated, fine
    raise QuadratureNotConverged("Finite-difference transfer matrix did not settle")


def mehler_propagator(
    x2: float,
    x1: float,
    T: float,
    m: float = 1.0,
    omega: float = 1.0,
    hbar: float = 1.0,
) -> ComplexAmplitude:
    """Real-time harmonic-oscillator propagator for `0 < omega T < pi`.

    Raises:
        ValueError: Outside the first caustic-free interval.
    """
    if not 0 < omega * T < math.pi:
        raise ValueError("Mehler form is implemented for 0 < omega T < pi")
    s, c = math.sin(omega * T), math.cos(omega * T)
    prefactor = cmath.sqrt(m * omega / (2j * math.pi * hbar * s))
    exponent = 1j * m * omega / (2 * hbar * s) * ((x2 * x2 + x1 * x1) * c - 2 * x2 * x1)
    return ComplexAmplitude(prefactor * cmath.exp(exponent), Unit.INVERSE_LENGTH)


def damped_momentum_integral(
    dq: ArrayLike,
    energy: EnergyFn,
    duration: float,
    delta: float,
    *,
    hbar: float = 1.0,
    max_speed: float = 1.0,
    range_factor: float = 1.0,
    panel_scale: float = 1.0,
    chunk: int = 64,
) -> NDArray[np.complex128]:
    """Damped momentum integral of `exp{(i/hbar)[p dq - duration E(p)]}`.

    Computes `(1/2 pi hbar) int exp{...} e^{-delta |p|} dp`.

    The two half lines are integrated with composite 16-point Gauss-Legendre
    panels up to `p = 30 range_factor / delta`; panels are narrow enough to
    resolve the phase, whose slope is bounded by `|dq| + duration * max_speed`.

    Args:
        dq (ArrayLike): Position differences (scalar or array).
        energy (EnergyFn): Vectorised `E(p)`.
        duration (float): Time multiplying the energy.
        delta (float): Damping parameter, positive.
        hbar (float): Reduced Planck constant.
        max_speed (float): Bound on `|E'(p)|`.
        range_factor (float): Multiplier on the momentum cut-off.
        panel_scale (float): Multiplier on the panel width.
        chunk (int): Number of `dq` values evaluated per vectorised pass.

    Returns:
        NDArray[np.complex128]: Values with the shape of `dq`.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    dq_arr = np.atleast_1d(np.asarray(dq, dtype=float))
    flat = dq_arr.ravel()
    out = np.empty(flat.size, dtype=complex)
    p_max = 30.0 * range_factor / delta
    for start in range(0, flat.size, chunk):
        part = flat[start : start + chunk]
        slope = float(np.max(np.abs(part))) + abs(duration) * max_speed
        width = panel_scale * min(1.0, 5.0 * hbar / max(slope, 1e-12))
        rule = Quadrature.panels(0.0, p_max, width)
        p = rule.nodes
        damping = rule.weights * np.exp(-delta * p)
        forward = np.exp(-1j * duration * energy(p) / hbar) * damping
        backward = np.exp(-1j * duration * energy(-p) / hbar) * damping
        phase = np.exp(1j * np.outer(part, p) / hbar)
        out[start : start + part.size] = phase @ forward + phase.conj() @ backward
    return (out / (2 * math.pi * hbar)).reshape(dq_arr.shape)


@dataclass(slots=True)
class DampingExtrapolation:
    """Zero-damping extrapolant together with the lower-order estimate."""

    value: complex
    lower_order: complex
    samples: tuple[complex, ...]

    @property
    def discrepancy(self) -> float:
        """Relative difference between the two extrapolants."""
        return abs(self.value - self.lower_order) / max(abs(self.value), 1e-300)


def extrapolate_to_zero(
    deltas: Sequence[float], values: Sequence[complex], *, tolerance: float = 0.05
) -> DampingExtrapolation:
    """Extrapolate `values(delta)` to `delta = 0` by an interpolating polynomial.

    Raises:
        QuadratureNotConverged: When the full and the two-point extrapolants
            differ by more than `tolerance` (relative).
    """
    if len(deltas) < 2 or len(deltas) != len(values):
        raise ValueError("Need at least two damping samples")
    order = np.argsort(deltas)
    xs = np.asarray(deltas, dtype=float)[order]
    ys = np.asarray(values, dtype=complex)[order]
    full = complex(np.polyval(np.polyfit(xs, ys, xs.size - 1), 0.0))
    lower = complex(ys[0] - xs[0] * (ys[1] - ys[0]) / (xs[1] - xs[0]))
    result = DampingExtrapolation(full, lower, tuple(complex(v) for v in ys))
    if result.discrepancy > tolerance:
        raise QuadratureNotConverged(
            f"Damping extrapolation unstable (relative spread {result.discrepancy:.3e})"
        )
    return result


def relativistic_energy(m: float) -> EnergyFn:
    """Return `E(p) = sqrt(p^2 + m^2)`."""
    return lambda p: np.sqrt(p * p + m * m)


def damped_relativistic_kernel(
    dq: ArrayLike, T: float, delta: float, m: float = 1.0, hbar: float = 1.0, **kwargs
) -> NDArray[np.complex128]:
    """Relativistic kernel with fixed damping `delta` (no extrapolation)."""
    return damped_momentum_integral(
        dq, relativistic_energy(m), T, delta, hbar=hbar, **kwargs
    )


def relativistic_free_propagator(
    dq: float,
    T: float,
    m: float = 1.0,
    hbar: float = 1.0,
    *,
    deltas: Sequence[float] = DEFAULT_DAMPINGS,
    range_factor: float = 1.0,
    panel_scale: float = 1.0,
) -> ComplexAmplitude:
    """Phase-space free relativistic propagator by damped quadrature.

    The damping `exp(-delta |p|)` is applied for each `delta` in `deltas` and
    the results extrapolated to zero damping.

    Raises:
        ValueError: If `T <= 0`.
        QuadratureNotConverged: If the damping extrapolation is unstable.
    """
    _check_duration(T)
    values = [
        complex(
            damped_relativistic_kernel(
                dq,
                T,
                delta,
                m,
                hbar,
                range_factor=range_factor,
                panel_scale=panel_scale,
            )[0]
        )
        for delta in deltas
    ]
    result = extrapolate_to_zero(deltas, values)
    log.debug(
        "Relativistic propagator dq=%g T=%g: %r (spread %.2e)",
        dq,
        T,
        result.value,
        result.discrepancy,
    )
    return ComplexAmplitude(result.value, Unit.INVERSE_LENGTH)


def relativistic_closed_form(
    dq: float, T: float, m: float = 1.0, hbar: float = 1.0
) -> ComplexAmplitude:
    """Closed form of the relativistic propagator off the light cone.

    Massless: `-i T / (pi (T^2 - dq^2))`. Massive, with `mu = m / hbar`:
    `-(mu T / 2 s) H1^(2)(mu s)` inside the cone (`s^2 = T^2 - dq^2`) and
    `i mu T K1(mu r) / (pi r)` outside it (`r^2 = dq^2 - T^2`).

    Raises:
        ValueError: On the light cone or for `T <= 0`.
    """
    _check_duration(T)
    interval = T * T - dq * dq
    if abs(interval) <= 1e-14 * T * T:
        raise ValueError("Closed form is singular on the light cone")
    if m == 0:
        return ComplexAmplitude(-1j * T / (math.pi * interval), Unit.INVERSE_LENGTH)
    mu = m / hbar
    if interval > 0:
        s = math.sqrt(interval)
        value = -(mu * T / (2 * s)) * complex(hankel2(1, mu * s))
    else:
        r = math.sqrt(-interval)
        value = 1j * mu * T * float(k1(mu * r)) / (math.pi * r)
    return ComplexAmplitude(value, Unit.INVERSE_LENGTH)
