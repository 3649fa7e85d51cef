"""Coherent-state representation, its lattice propagator and canonical covariance."""

import math
import warnings
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from functools import partial
from logging import getLogger
from typing import Self

import numpy as np
from numpy.typing import ArrayLike, NDArray

from pathint.core.errors import (
    QuadratureNotConverged,
    SupportTruncationWarning,
    UnsupportedSymbol,
)
from pathint.core.numerics import (
    ComplexAmplitude,
    GaussianKernel,
    QuadraticExpression,
    TimeLattice,
    compose_power,
)
from pathint.core.quadrature import Quadrature
from pathint.oracles.fock import (
    FockSpace,
    OperatorMatrix,
    StateVector,
    antinormal_quantize,
    coherent_components,
    coherent_vector,
    cs_overlap_closed_form,
    matrix_propagator,
)
from pathint.oracles.symbols import HamiltonianSymbol, Ordering

log = getLogger(__name__)

type ComplexArray = NDArray[np.complex128]
type Pins = tuple[float, float, float, float]
type LinkFn = Callable[[NDArray, NDArray, NDArray, NDArray], ComplexArray]

MAX_DIRECT_LINKS = 4
CHAIN_ROWS = 256
SUPPORT_THRESHOLD = 1e-6


@dataclass(frozen=True, slots=True)
class PhaseSpaceGrid:
    """Uniform `(p, q)` grid with trapezoid weights."""

    p_min: float
    p_max: float
    q_min: float
    q_max: float
    n_p: int
    n_q: int

    def __post_init__(self) -> None:
        """Validate the extents."""
        if self.n_p < 5 or self.n_q < 5:
            raise ValueError("PhaseSpaceGrid needs at least 5 points per axis")
        if not (self.p_max > self.p_min and self.q_max > self.q_min):
            raise ValueError("PhaseSpaceGrid extents must be increasing")

    @classmethod
    def square(cls, extent: float, step: float) -> Self:
        """Square grid `[-extent, extent]^2` with the given spacing."""
        n = round(2 * extent / step) + 1
        return cls(-extent, extent, -extent, extent, n, n)

    @property
    def p(self) -> NDArray[np.float64]:
        """Momentum nodes."""
        return np.linspace(self.p_min, self.p_max, self.n_p)

    @property
    def q(self) -> NDArray[np.float64]:
        """Position nodes."""
        return np.linspace(self.q_min, self.q_max, self.n_q)

    @property
    def steps(self) -> tuple[float, float]:
        """Spacings `(dp, dq)`."""
        return (
            (self.p_max - self.p_min) / (self.n_p - 1),
            (self.q_max - self.q_min) / (self.n_q - 1),
        )

    def mesh(self) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """`(P, Q)` arrays of shape `(n_p, n_q)`."""
        return np.meshgrid(self.p, self.q, indexing="ij")

    def weights(self) -> NDArray[np.float64]:
        """Product trapezoid weights of shape `(n_p, n_q)`."""
        return np.outer(
            Quadrature.trapezoid(self.p_min, self.p_max, self.n_p).weights,
            Quadrature.trapezoid(self.q_min, self.q_max, self.n_q).weights,
        )


@dataclass(frozen=True, slots=True, eq=False)
class CSFunctionSample:
    """Values `psi(p, q) = <p,q|psi>` on a phase-space grid."""

    grid: PhaseSpaceGrid
    values: ComplexArray

    def __post_init__(self) -> None:
        """Check the shape."""
        if self.values.shape != (self.grid.n_p, self.grid.n_q):
            raise ValueError("CSFunctionSample needs one value per grid node")


def cs_overlap(
    p2: float, q2: float, p1: float, q1: float, hbar: float = 1.0
) -> ComplexAmplitude:
    """`<p2,q2|p1,q1> = exp{i (p2 + p1)(q2 - q1) / 2 hbar - [dp^2 + dq^2] / 4 hbar}`."""
    return ComplexAmplitude(cs_overlap_closed_form(p2, q2, p1, q1, hbar))


def representative(
    state: StateVector, space: FockSpace, grid: PhaseSpaceGrid
) -> CSFunctionSample:
    """Sample `<p,q|psi>` on the grid.

    Raises:
        ValueError: If a sample exceeds the state norm.
    """
    p, q = grid.mesh()
    values = coherent_components(p, q, space).conj() @ state.components
    bound = state.norm() * (1 + 1e-10)
    if np.max(np.abs(values)) > bound:
        raise ValueError("Representative exceeds the state norm")
    return CSFunctionSample(grid, values)


def _check_support(
    values: NDArray[np.float64], threshold: float = SUPPORT_THRESHOLD
) -> None:
    edge = max(
        float(np.max(values[0])),
        float(np.max(values[-1])),
        float(np.max(values[:, 0])),
        float(np.max(values[:, -1])),
    )
    peak = float(np.max(values))
    if peak > 0 and edge > threshold * peak:
        warnings.warn(
            f"Integrand at the grid edge is {edge / peak:.2e} of its maximum",
            SupportTruncationWarning,
            stacklevel=3,
        )


def cs_inner_product(
    f: CSFunctionSample, g: CSFunctionSample, hbar: float = 1.0
) -> ComplexAmplitude:
    """`int f* g dp dq / (2 pi hbar)` by the trapezoid rule.

    Raises:
        ValueError: If the samples live on different grids.
    """
    if f.grid != g.grid:
        raise ValueError("Representatives live on different grids")
    integrand = f.values.conj() * g.values
    _check_support(np.abs(integrand))
    total = np.sum(f.grid.weights() * integrand) / (2 * math.pi * hbar)
    return ComplexAmplitude(complex(total))


def _derivative(values: ComplexArray, step: float, axis: int) -> ComplexArray:
    """Fourth-order central difference; the two outer rows on each side are dropped."""
    moved = np.moveaxis(values, axis, 0)
    result = (-moved[4:] + 8 * moved[3:-1] - 8 * moved[1:-3] + moved[:-4]) / (12 * step)
    return np.moveaxis(result, 0, axis)


def heisenberg_rep_check(
    state: StateVector, space: FockSpace, grid: PhaseSpaceGrid
) -> float:
    """Compare `P -> -i hbar d/dq` and `Q -> q + i hbar d/dp` with the Fock engine.

    Returns:
        float: Largest deviation over the interior of the grid.
    """
    hbar = space.hbar
    dp, dq = grid.steps
    psi = representative(state, space, grid).values
    p_psi = representative(space.momentum() @ state, space, grid).values
    q_psi = representative(space.position() @ state, space, grid).values
    inner = (slice(2, -2), slice(2, -2))
    d_q = _derivative(psi, dq, axis=1)[2:-2, :]
    d_p = _derivative(psi, dp, axis=0)[:, 2:-2]
    _, q = grid.mesh()
    momentum_gap = np.abs(-1j * hbar * d_q - p_psi[inner])
    position_gap = np.abs(q[inner] * psi[inner] + 1j * hbar * d_p - q_psi[inner])
    residual = float(max(momentum_gap.max(), position_gap.max()))
    log.debug("Heisenberg residual %.3e at steps %s", residual, grid.steps)
    return residual


def _link_arguments(
    p_out: ArrayLike, q_out: ArrayLike, p_in: ArrayLike, q_in: ArrayLike
) -> tuple[ArrayLike, ArrayLike]:
    """Complex symbol arguments of one coherent-state link."""
    u = (p_out + p_in) * 0.5 + (q_out - q_in) * 0.5j
    v = (q_out + q_in) * 0.5 - (p_out - p_in) * 0.5j
    return u, v


def _link_values(
    H: HamiltonianSymbol,
    eps: float,
    hbar: float,
    p_out: NDArray,
    q_out: NDArray,
    p_in: NDArray,
    q_in: NDArray,
) -> ComplexArray:
    u, v = _link_arguments(p_out, q_out, p_in, q_in)
    dp, dq = p_out - p_in, q_out - q_in
    exponent = (1j / hbar) * ((p_out + p_in) * dq / 2 - eps * H(u, v)) - (
        dp * dp + dq * dq
    ) / (4 * hbar)
    return np.exp(exponent)


def link_variables() -> tuple[QuadraticExpression, ...]:
    """Affine forms of `(p_out, q_out, p_in, q_in)` in four variables."""
    return tuple(QuadraticExpression.linear_form(np.eye(4)[k]) for k in range(4))


def symbol_expression(
    H: HamiltonianSymbol, u: QuadraticExpression, v: QuadraticExpression
) -> QuadraticExpression:
    """`H(u, v)` for a symbol of degree at most two and affine arguments.

    Raises:
        UnsupportedSymbol: If `H` is not a polynomial of degree at most two.
    """
    if not H.is_quadratic:
        raise UnsupportedSymbol("Gaussian links need a quadratic symbol")
    total = QuadraticExpression.zero(u.n_vars)
    for (i, j), value in np.ndenumerate(H.coefficients):
        if value == 0:
            continue
        term = QuadraticExpression.linear_form(np.zeros(u.n_vars), 1.0)
        for factor in [u] * i + [v] * j:
            term = term * factor
        total = total + term * float(value)
    return total


def cs_link_kernel(
    H: HamiltonianSymbol, eps: float, hbar: float = 1.0
) -> GaussianKernel:
    """One coherent-state link as a two-dimensional Gaussian kernel.

    Raises:
        UnsupportedSymbol: If `H` is not a polynomial of degree at most two.
    """
    p_out, q_out, p_in, q_in = link_variables()
    u, v = _link_arguments(p_out, q_out, p_in, q_in)
    symbol = symbol_expression(H, u, v)
    dp, dq = p_out - p_in, q_out - q_in
    exponent = ((p_out + p_in) * dq * 0.5 - symbol * eps) * (1j / hbar) - (
        dp * dp + dq * dq
    ) * (1 / (4 * hbar))
    return GaussianKernel.from_expression(1.0, exponent)


def chain_box_rule(
    pins: Pins, half_extra: float, width: float, order: int
) -> Quadrature:
    """Product Gauss-Legendre rule on a square around the midpoint of the pins."""
    p2, q2, p1, q1 = pins
    half = max(abs(p2 - p1), abs(q2 - q1)) / 2 + half_extra
    p_mid, q_mid = (p2 + p1) / 2, (q2 + q1) / 2
    return Quadrature.tensor(
        Quadrature.panels(p_mid - half, p_mid + half, width, order),
        Quadrature.panels(q_mid - half, q_mid + half, width, order),
    )


def phase_space_chain(
    link: LinkFn, n_interior: int, pins: Pins, rule: Quadrature, measure: float
) -> complex:
    """Integrate a chain of `n_interior + 1` identical links over `rule`.

    `link(p_out, q_out, p_in, q_in)` broadcasts over its arguments; each
    interior `(p, q)` integration carries the constant `measure`.
    """
    p2, q2, p1, q1 = pins
    if n_interior == 0:
        return complex(link(np.array(p2), np.array(q2), np.array(p1), np.array(q1)))
    p, q = rule.nodes[:, 0], rule.nodes[:, 1]
    weights = rule.weights * measure
    vector = link(p, q, np.array(p1), np.array(q1))
    for _ in range(n_interior - 1):
        weighted = weights * vector
        updated = np.empty_like(vector)
        for start in range(0, p.size, CHAIN_ROWS):
            rows = slice(start, start + CHAIN_ROWS)
            block = link(
                p[rows, np.newaxis], q[rows, np.newaxis], p[np.newaxis], q[np.newaxis]
            )
            updated[rows] = block @ weighted
        vector = updated
    last = link(np.array(p2), np.array(q2), p, q)
    return complex(np.sum(last * weights * vector))


def cs_lattice_propagator(
    H: HamiltonianSymbol,
    lattice: TimeLattice,
    pins: Pins,
    hbar: float = 1.0,
    *,
    tolerance: float = 1e-6,
) -> ComplexAmplitude:
    """Coherent-state lattice propagator with the complex-argument symbol.

    Each link carries the overlap phase and Gaussian of neighbouring labels and
    `exp(-i eps H(u, v) / hbar)` with `u = pbar + i dq / 2` and
    `v = qbar - i dp / 2`. Quadratic symbols are composed in closed form;
    other symbols are integrated directly on a product rule for at most
    three interior points.

    Args:
        H (HamiltonianSymbol): Symbol evaluated at the complex arguments.
        lattice (TimeLattice): Lattice with `n` interior `(p, q)` integrations.
        pins (Pins): `(p2, q2, p1, q1)`.
        hbar (float): Reduced Planck constant.
        tolerance (float): Relative agreement required between two quadrature
            orders on the direct route.

    Returns:
        ComplexAmplitude: `K(p2, q2; p1, q1)`.

    Raises:
        UnsupportedSymbol: For non-quadratic symbols on long lattices.
        QuadratureNotConverged: If the direct route does not settle.
    """
    p2, q2, p1, q1 = pins
    if H.is_quadratic:
        link = cs_link_kernel(H, lattice.eps, hbar)
        kernel = compose_power(link, lattice.n_links, measure=1 / (2 * math.pi * hbar))
        value = complex(kernel(np.array([p2, q2]), np.array([p1, q1])))
        return ComplexAmplitude(value)
    if lattice.n_links > MAX_DIRECT_LINKS:
        raise UnsupportedSymbol(
            f"Non-quadratic symbols need at most {MAX_DIRECT_LINKS - 1} interior points"
        )
    link = partial(_link_values, H, lattice.eps, hbar)
    measure = 1 / (2 * math.pi * hbar)
    spread, width = 7 * math.sqrt(hbar), math.sqrt(hbar)
    coarse, fine = (
        phase_space_chain(
            link, lattice.n, pins, chain_box_rule(pins, spread, width, order), measure
        )
        for order in (6, 8)
    )
    if abs(fine - coarse) > tolerance * max(abs(fine), 1e-300):
        raise QuadratureNotConverged(
            f"Direct coherent-state chain moved by {abs(fine - coarse):.2e}"
        )
    return ComplexAmplitude(fine)


def _generator_for(
    H: HamiltonianSymbol | OperatorMatrix, space: FockSpace
) -> OperatorMatrix:
    if isinstance(H, OperatorMatrix):
        return H
    return antinormal_quantize(H, space)


def cs_combination_check(
    H: HamiltonianSymbol | OperatorMatrix,
    T1: float,
    T2: float,
    pins: Pins,
    space: FockSpace,
    quadrature: Quadrature | None = None,
) -> float:
    """Residual of `K(3;1) = int K(3;2) K(2;1) dp dq / (2 pi hbar)` for Fock kernels.

    `T1` is the duration from label 1 to the intermediate labels, `T2` from
    there to label 3; `pins` are `(p3, q3, p1, q1)`.
    """
    hbar = space.hbar
    generator = _generator_for(H, space)
    if quadrature is None:
        quadrature = Quadrature.disk(8.0, 96, 96)
    p3, q3, p1, q1 = pins
    bra = coherent_vector(p3, q3, space).components
    ket = coherent_vector(p1, q1, space).components
    late = bra.conj() @ matrix_propagator(generator, T2, hbar).matrix
    early = matrix_propagator(generator, T1, hbar).matrix @ ket
    whole = bra.conj() @ matrix_propagator(generator, T1 + T2, hbar).matrix @ ket
    nodes = coherent_components(quadrature.nodes[:, 0], quadrature.nodes[:, 1], space)
    integrand = (nodes @ late) * (nodes.conj() @ early)
    composed = complex(quadrature.integrate(integrand)) / (2 * math.pi * hbar)
    return abs(complex(whole) - composed)


@dataclass(frozen=True, slots=True)
class CanonicalTransform:
    """Point-gauge transform `qbar = q`, `pbar = p + kappa q`.

    Its generator is `Gbar(pbar, qbar) = -kappa qbar^2 / 2`, so that
    `pbar dqbar + dGbar = p dq`.
    """

    kappa: float

    def forward(self, p: ArrayLike, q: ArrayLike) -> tuple[NDArray, NDArray]:
        """Map `(p, q)` to barred labels."""
        p_arr, q_arr = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
        return p_arr + self.kappa * q_arr, q_arr

    def inverse(self, pbar: ArrayLike, qbar: ArrayLike) -> tuple[NDArray, NDArray]:
        """Map barred labels back to `(p, q)`."""
        pb, qb = np.asarray(pbar, dtype=float), np.asarray(qbar, dtype=float)
        return pb - self.kappa * qb, qb

    def generator(self, pbar: ArrayLike, qbar: ArrayLike) -> NDArray:
        """`Gbar(pbar, qbar)`."""
        del pbar
        return -0.5 * self.kappa * np.asarray(qbar, dtype=float) ** 2

    def jacobian(self) -> NDArray[np.float64]:
        """`d(p, q) / d(pbar, qbar)`; constant for this family."""
        return np.array([[1.0, -self.kappa], [0.0, 1.0]])

    def one_form_residual(self, p: ArrayLike, q: ArrayLike) -> float:
        """Largest deviation of `pbar dqbar + dGbar - p dq` at the given points."""
        pb, qb = self.forward(p, q)
        h = 1e-5
        # qbar = q, so only the dq component survives
        upper = self.generator(*self.forward(p, qb + h))
        lower = self.generator(*self.forward(p, qb - h))
        gradient = (upper - lower) / (2 * h)
        return float(np.max(np.abs(pb + gradient - np.asarray(p, dtype=float))))

    def transform_symbol(self, H: HamiltonianSymbol) -> HamiltonianSymbol:
        """`Hbar(pbar, qbar) = H(pbar - kappa qbar, qbar)` for polynomial symbols.

        Raises:
            UnsupportedSymbol: If `H` carries a kinetic term.
        """
        if not H.is_polynomial:
            raise UnsupportedSymbol("Symbol transformation needs a polynomial symbol")
        c = H.coefficients
        out = np.zeros((c.shape[0], c.shape[0] + c.shape[1] - 1))
        for (i, j), value in np.ndenumerate(c):
            if value == 0:
                continue
            for k in range(i + 1):
                out[k, j + i - k] += value * math.comb(i, k) * (-self.kappa) ** (i - k)
        return HamiltonianSymbol(out, H.ordering, name=H.name)


def _barred_state(
    tr: CanonicalTransform, pbar: float, qbar: float, space: FockSpace
) -> StateVector:
    """`exp(-i Gbar / hbar) |p, q>` at the barred labels."""
    p, q = tr.inverse(pbar, qbar)
    phase = np.exp(-1j * tr.generator(pbar, qbar) / space.hbar)
    return StateVector(phase * coherent_vector(float(p), float(q), space).components)


def canonical_phase_check(
    tr: CanonicalTransform,
    H: HamiltonianSymbol | OperatorMatrix,
    T: float,
    pins: Sequence[Pins],
    space: FockSpace,
) -> float:
    """Compare the two routes to the propagator at barred labels.

    Route one takes the matrix element between phase-adjusted coherent
    states; route two multiplies the original propagator by
    `exp{i [Gbar(2) - Gbar(1)] / hbar}`. Pins are barred labels.

    Returns:
        float: Largest difference over the pins.
    """
    generator = _generator_for(H, space)
    evolution = matrix_propagator(generator, T, space.hbar)
    hbar = space.hbar
    residual = 0.0
    for pb2, qb2, pb1, qb1 in pins:
        direct = _barred_state(tr, pb2, qb2, space).inner(
            evolution @ _barred_state(tr, pb1, qb1, space)
        )
        p2, q2 = tr.inverse(pb2, qb2)
        p1, q1 = tr.inverse(pb1, qb1)
        original = coherent_vector(float(p2), float(q2), space).inner(
            evolution @ coherent_vector(float(p1), float(q1), space)
        )
        shift = complex(
            np.exp(1j * (tr.generator(pb2, qb2) - tr.generator(pb1, qb1)) / hbar)
        )
        residual = max(residual, abs(direct - shift * original))
    return residual


def transformed_quantization(
    tr: CanonicalTransform,
    H: HamiltonianSymbol,
    space: FockSpace,
    radius: float,
    *,
    order: int = 10,
) -> OperatorMatrix:
    """Anti-normal quantization of `Hbar` over phase-adjusted states in barred labels.

    The barred rectangle covers the image of the disk of `radius`.
    """
    if H.ordering is not Ordering.ANTINORMAL:
        raise ValueError("transformed_quantization expects an anti-normal symbol")
    barred = tr.transform_symbol(H)
    p_half = radius * (1 + abs(tr.kappa))
    rule = Quadrature.tensor(
        Quadrature.panels(-p_half, p_half, 1.0, order),
        Quadrature.panels(-radius, radius, 1.0, order),
    )
    pb, qb = rule.nodes[:, 0], rule.nodes[:, 1]
    p, q = tr.inverse(pb, qb)
    phase = np.exp(-1j * tr.generator(pb, qb) / space.hbar)
    vectors = coherent_components(p, q, space) * phase[:, np.newaxis]
    weights = rule.weights * np.real(barred(pb, qb)) / (2 * math.pi * space.hbar)
    matrix = (vectors * weights[:, np.newaxis]).T @ vectors.conj()
    return OperatorMatrix(0.5 * (matrix + matrix.conj().T), hermitian=True)


def operator_invariance_residual(
    tr: CanonicalTransform, H: HamiltonianSymbol, space: FockSpace, radius: float
) -> float:
    """Trusted-block gap between the barred and the original quantization."""
    barred = transformed_quantization(tr, H, space, radius)
    original = antinormal_quantize(H, space, radius)
    block = space.trusted_dim
    return float(np.max(np.abs(barred.block(block) - original.block(block))))


def metric_pullback(
    tr: CanonicalTransform, point: tuple[float, float]
) -> tuple[float, float, float]:
    """Flat metric `dp^2 + dq^2` in barred coordinates at `point`.

    Returns:
        tuple[float, float, float]: `(A, B, C)` of
            `A dpbar^2 + 2B dpbar dqbar + C dqbar^2`.

    Raises:
        ValueError: If the Jacobian is singular at the point.
    """
    del point
    jacobian = tr.jacobian()
    if abs(np.linalg.det(jacobian)) < 1e-14:
        raise ValueError("Canonical transform is singular at the point")
    metric = jacobian.T @ jacobian
    return float(metric[0, 0]), float(metric[0, 1]), float(metric[1, 1])
