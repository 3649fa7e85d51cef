"""Real-time lattice path integrals in configuration and phase space."""

import cmath
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from enum import StrEnum
from logging import getLogger

import numpy as np
from numpy.typing import NDArray

from pathint.core.errors import UnsupportedSymbol
from pathint.core.grids import (
    KernelMatrix,
    PotentialKind,
    PotentialSpec,
    SpatialGrid,
    check_grid_truncation,
)
from pathint.core.numerics import (
    ComplexAmplitude,
    GaussianKernel,
    QuadraticExpression,
    TimeLattice,
    Unit,
    compose_gaussian,
    compose_power,
)
from pathint.core.quadrature import Quadrature
from pathint.oracles.closed_form import (
    DEFAULT_DAMPINGS,
    damped_momentum_integral,
    extrapolate_to_zero,
)
from pathint.oracles.symbols import HamiltonianSymbol

log = getLogger(__name__)

type Pins = Sequence[tuple[float, float]]
type KernelValue = GaussianKernel | KernelMatrix | Callable[[NDArray, NDArray], NDArray]


class Representation(StrEnum):
    """Which variables are pinned."""

    CONFIGURATION = "configuration"
    MOMENTUM = "momentum"
    COHERENT = "coherent"


@dataclass(frozen=True, slots=True)
class IntegrationCount:
    """Number of momentum and position integrations of a lattice."""

    p_integrations: int
    q_integrations: int

    @classmethod
    def for_lattice(
        cls, representation: Representation, lattice: TimeLattice
    ) -> IntegrationCount:
        """Count integrations for `lattice` in the given representation."""
        n = lattice.n
        match representation:
            case Representation.CONFIGURATION:
                return cls(n + 1, n)
            case Representation.MOMENTUM:
                return cls(n, n + 1)
            case Representation.COHERENT:
                return cls(n, n)


def convergence_factor(lattice: TimeLattice) -> float:
    """Gaussian damping coefficient `eps^2` of the vanishing convergence factor."""
    return lattice.eps**2


def _link_kernel(
    V: PotentialSpec,
    lattice: TimeLattice,
    m: float,
    hbar: float,
    damping: float,
    *,
    damp_input: bool,
) -> GaussianKernel:
    """One link `x_l -> x_{l+1}` with the potential at the left point."""
    eps = lattice.eps
    c0, c1, c2 = V.polynomial
    kinetic = 1j * m / (2 * hbar * eps)
    gamma = damping / (2 * hbar) if damp_input else 0.0
    a = kinetic
    b = -2 * kinetic
    c = kinetic - 1j * eps * c2 / hbar - gamma
    linear = (0.0, -1j * eps * c1 / hbar)
    prefactor = cmath.sqrt(m / (2j * math.pi * hbar * eps))
    prefactor *= cmath.exp(-1j * eps * c0 / hbar)
    return GaussianKernel.from_coefficients(
        prefactor, a, b, c, linear=linear, unit=Unit.INVERSE_LENGTH
    )


def lattice_chain_kernel(
    V: PotentialSpec,
    lattice: TimeLattice,
    m: float = 1.0,
    hbar: float = 1.0,
    *,
    damping: float = 0.0,
) -> GaussianKernel:
    """Closed-form kernel of the configuration-space lattice for `V` at most quadratic.

    Args:
        V (PotentialSpec): Potential of kind zero, constant, linear or quadratic.
        lattice (TimeLattice): Lattice with `n` interior integrations.
        m (float): Mass.
        hbar (float): Reduced Planck constant.
        damping (float): Coefficient `g` of the factor `exp(-g x_l^2 / 2 hbar)` on
            every interior node; `convergence_factor(lattice)` reproduces the
            vanishing convergence factor.

    Returns:
        GaussianKernel: `K(x'', x')` of the whole chain.

    Raises:
        UnsupportedSymbol: For tabulated potentials.
        CompositionDiverges: Propagated from the kernel algebra.
    """
    if V.kind is PotentialKind.TABULATED:
        raise UnsupportedSymbol("Closed-form chain needs a polynomial potential")
    first = _link_kernel(V, lattice, m, hbar, damping, damp_input=False)
    rest = _link_kernel(V, lattice, m, hbar, damping, damp_input=True)
    return compose_gaussian(compose_power(rest, lattice.n), first)


def lattice_chain_quadratic(
    V: PotentialSpec,
    lattice: TimeLattice,
    x2: float,
    x1: float,
    m: float = 1.0,
    hbar: float = 1.0,
    *,
    damping: float = 0.0,
) -> ComplexAmplitude:
    """Evaluate the configuration-space lattice integral exactly.

    The potential enters at the left point of every link, so a constant `c`
    contributes `exp(-i c (n + 1) eps / hbar)`.

    Raises:
        UnsupportedSymbol: For tabulated potentials.
        CompositionDiverges: Propagated from the kernel algebra.
    """
    kernel = lattice_chain_kernel(V, lattice, m, hbar, damping=damping)
    return kernel.amplitude(x2, x1)


def lattice_step_matrix(
    V: PotentialSpec, eps: float, grid: SpatialGrid, m: float = 1.0, hbar: float = 1.0
) -> NDArray[np.complex128]:
    """Single-link matrix `M[i, j]` from node `j` to node `i`."""
    x = grid.nodes
    dx = x[:, np.newaxis] - x[np.newaxis, :]
    prefactor = cmath.sqrt(m / (2j * math.pi * hbar * eps))
    action = m * dx**2 / (2 * eps) - eps * V(x)[np.newaxis, :]
    return prefactor * np.exp(1j * action / hbar)


def lattice_grid_general(
    V: PotentialSpec,
    lattice: TimeLattice,
    grid: SpatialGrid,
    m: float = 1.0,
    hbar: float = 1.0,
    damping: float = 0.0,
) -> KernelMatrix:
    """Configuration-space lattice kernel by repeated grid quadrature.

    Computes `M (D M)^n` where `D` holds the trapezoid weights times the
    damping factor of the interior nodes.

    Raises:
        PotentialBoundViolation: If `V` dips below its bound on the grid.
    """
    if damping < 0:
        raise ValueError("damping must be non-negative")
    V.check_bounded(grid)
    step = lattice_step_matrix(V, lattice.eps, grid, m, hbar)
    weights = grid.weights * np.exp(-damping * grid.nodes**2 / (2 * hbar))
    kernel = step @ np.linalg.matrix_power(weights[:, np.newaxis] * step, lattice.n)
    counts = IntegrationCount.for_lattice(Representation.CONFIGURATION, lattice)
    result = KernelMatrix(
        grid,
        kernel,
        {
            "scheme": "lattice-grid",
            "n": lattice.n,
            "eps": lattice.eps,
            "damping": damping,
            "q_integrations": counts.q_integrations,
        },
    )
    check_grid_truncation(result)
    return result


def _momentum_coefficients(H: HamiltonianSymbol) -> tuple[float, float, float]:
    part = np.zeros(3)
    coefficients = H.momentum_part()
    if coefficients.size > 3:
        raise UnsupportedSymbol("Momentum dependence beyond quadratic")
    part[: coefficients.size] = coefficients
    return float(part[0]), float(part[1]), float(part[2])


def _position_coefficients(H: HamiltonianSymbol) -> tuple[float, float]:
    part = H.position_part()
    if part.size > 3:
        raise UnsupportedSymbol("Position dependence beyond quadratic")
    padded = np.zeros(3)
    padded[: part.size] = part
    return float(padded[1]), float(padded[2])


def _conjugate_link(
    kinetic: tuple[float, float, float],
    midpoint: tuple[float, float],
    eps: float,
    hbar: float,
    sign: float,
) -> GaussianKernel:
    """Link after integrating out the conjugate variable in closed form.

    For the q-pinned lattice `kinetic` holds `(k0, k1, k2)` of `k0 + k1 p + k2 p^2`
    and `midpoint` holds `(u1, u2)` of the potential evaluated at the midpoint of
    the pinned variables. The p-pinned lattice swaps the roles and uses
    `sign = -1` for the phase `-q dp`.
    """
    k0, k1, k2 = kinetic
    u1, u2 = midpoint
    if k2 <= 0:
        raise UnsupportedSymbol("Conjugate integral needs a positive quadratic term")
    z_out = QuadraticExpression.linear_form([1.0, 0.0])
    z_in = QuadraticExpression.linear_form([0.0, 1.0])
    shift = (z_out - z_in) * sign - eps * k1
    mid = (z_out + z_in) * 0.5
    exponent = (
        shift * shift * (1j / (4 * hbar * eps * k2))
        - (mid * u1 + mid * mid * u2) * (1j * eps / hbar)
        - 1j * eps * k0 / hbar
    )
    prefactor = cmath.sqrt(1.0 / (4j * math.pi * hbar * eps * k2))
    return GaussianKernel.from_expression(prefactor, exponent)


def _collapsed_integral(
    total_energy: Callable[[NDArray[np.float64]], NDArray[np.float64]],
    dq: float,
    duration: float,
    hbar: float,
    deltas: Sequence[float],
) -> complex:
    values = [
        complex(
            damped_momentum_integral(
                dq, total_energy, 1.0, delta, hbar=hbar, max_speed=duration
            )[0]
        )
        for delta in deltas
    ]
    return extrapolate_to_zero(deltas, values).value


def _link_sum(
    values: NDArray[np.float64], eps: float, n_links: int
) -> NDArray[np.float64]:
    """`sum_l eps * values` over identical links, summed link by link."""
    return np.sum(np.broadcast_to(eps * values, (n_links, *values.shape)), axis=0)


def ps_lattice_q(
    H: HamiltonianSymbol,
    lattice: TimeLattice,
    q2: float,
    q1: float,
    hbar: float = 1.0,
    *,
    deltas: Sequence[float] = DEFAULT_DAMPINGS,
) -> ComplexAmplitude:
    """Phase-space lattice with pinned positions.

    Each link carries `exp{(i/hbar)[p_l (q_{l+1} - q_l) - eps H(p_l, qbar_l)]}`
    with `qbar_l` the midpoint of the link. Separable symbols quadratic in p
    integrate the momenta in closed form; momentum-only symbols collapse, via
    the position integrations, to one damped momentum integral.

    Raises:
        UnsupportedSymbol: For symbols outside these two classes.
        QuadratureNotConverged: From the damped momentum integral.
    """
    eps = lattice.eps
    n_links = lattice.n_links
    if H.is_momentum_only and not (H.is_polynomial and H.degree <= 2):
        if H.is_polynomial:
            raise UnsupportedSymbol("Momentum-only polynomials above degree two")

        def total_energy(p: NDArray[np.float64]) -> NDArray[np.float64]:
            return _link_sum(np.real(H(p, 0.0)), eps, n_links)

        value = _collapsed_integral(
            total_energy, q2 - q1, lattice.duration, hbar, deltas
        )
        return ComplexAmplitude(value, Unit.INVERSE_LENGTH)
    if not (H.is_polynomial and H.is_separable):
        raise UnsupportedSymbol(
            "ps_lattice_q needs a separable or momentum-only symbol"
        )
    link = _conjugate_link(
        _momentum_coefficients(H), _position_coefficients(H), eps, hbar, 1.0
    )
    kernel = compose_power(link, n_links)
    return ComplexAmplitude(complex(kernel(q2, q1)), Unit.INVERSE_LENGTH)


def ps_lattice_p(
    H: HamiltonianSymbol,
    lattice: TimeLattice,
    p2: float,
    p1: float,
    hbar: float = 1.0,
    *,
    smear: float | None = None,
) -> ComplexAmplitude:
    """Phase-space lattice with pinned momenta.

    Each link carries `exp{(i/hbar)[-q_l (p_{l+1} - p_l) - eps H(pbar_l, q_l)]}`.
    Separable symbols quadratic in q integrate the positions in closed form;
    position-only symbols collapse to one q integral. Symbols without a q^2
    term make the kernel proportional to `delta(p2 - p1)`; pass `smear` to
    replace the delta by a normalized Gaussian of that width.

    Raises:
        UnsupportedSymbol: For other symbols, or a delta kernel without `smear`.
    """
    eps = lattice.eps
    n_links = lattice.n_links
    if not (H.is_polynomial and H.is_separable):
        raise UnsupportedSymbol("ps_lattice_p needs a separable polynomial symbol")
    k0, k1, k2 = _momentum_coefficients(H)
    u1, u2 = _position_coefficients(H)
    if u2 == 0:
        if u1 != 0:
            raise UnsupportedSymbol("Linear-only position dependence shifts the delta")
        if smear is None:
            raise UnsupportedSymbol("Kernel is delta-concentrated; pass smear")
        pbar = 0.5 * (p2 + p1)
        energy = float(_link_sum(np.array(k0 + k1 * pbar + k2 * pbar**2), eps, n_links))
        spike = math.exp(-((p2 - p1) ** 2) / (2 * smear**2)) / math.sqrt(
            2 * math.pi * smear**2
        )
        return ComplexAmplitude(
            spike * cmath.exp(-1j * energy / hbar), Unit.INVERSE_MOMENTUM
        )
    if H.is_position_only:
        duration = float(_link_sum(np.array(1.0), eps, n_links))
        link = _conjugate_link((k0, u1, u2), (0.0, 0.0), duration, hbar, -1.0)
        return ComplexAmplitude(complex(link(p2, p1)), Unit.INVERSE_MOMENTUM)
    link = _conjugate_link((k0, u1, u2), (k1, k2), eps, hbar, -1.0)
    kernel = compose_power(link, n_links)
    return ComplexAmplitude(complex(kernel(p2, p1)), Unit.INVERSE_MOMENTUM)


def composition_check(
    kernel_fn: Callable[[float], KernelValue],
    t1: float,
    t_mid: float,
    t2: float,
    pins: Pins,
    quadrature: Quadrature | None = None,
) -> float:
    """Residual of the composition law `K(3,1) = int K(3,2) K(2,1) d(mid)`.

    `kernel_fn(duration)` may return a `GaussianKernel` (composed in closed
    form), a `KernelMatrix` (composed with its grid weights, pins snapped to
    grid nodes) or a vectorised callable `K(x_out, x_in)` (composed on
    `quadrature`).

    Returns:
        float: `max |K(3,1) - int K(3,2) K(2,1)|` over the pins.
    """
    late = kernel_fn(t2 - t_mid)
    early = kernel_fn(t_mid - t1)
    whole = kernel_fn(t2 - t1)
    residuals: list[float] = []
    if isinstance(whole, GaussianKernel):
        composed = compose_gaussian(late, early)
        residuals = [
            abs(complex(whole(x3, x1)) - complex(composed(x3, x1)))
            for x3, x1 in pins
        ]
    elif isinstance(whole, KernelMatrix):
        grid = whole.grid
        product = late.values @ (grid.weights[:, np.newaxis] * early.values)
        for x3, x1 in pins:
            i, k = grid.index_of(x3), grid.index_of(x1)
            residuals.append(abs(whole.values[i, k] - product[i, k]))
    else:
        if quadrature is None:
            raise ValueError("Callable kernels need a quadrature rule")
        y = quadrature.nodes
        for x3, x1 in pins:
            integrand = np.asarray(late(np.full_like(y, x3), y)) * np.asarray(
                early(y, np.full_like(y, x1))
            )
            direct = complex(np.asarray(whole(np.array([x3]), np.array([x1])))[0])
            residuals.append(abs(direct - complex(quadrature.integrate(integrand))))
    residual = max(residuals)
    log.debug("Composition residual %.3e over %d pins", residual, len(residuals))
    return residual
