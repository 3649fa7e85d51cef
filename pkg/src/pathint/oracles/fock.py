"""Truncated number-basis engine: Weyl operators, coherent states, quantization."""

import cmath
import math
from collections.abc import Callable
from dataclasses import dataclass
from functools import cache
from logging import getLogger
from typing import Self, overload

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import eigh, expm
from scipy.stats import poisson

from pathint.core.errors import (
    NotHermitian,
    QuadratureNotConverged,
    TruncationInsufficient,
)
from pathint.core.numerics import ComplexAmplitude
from pathint.core.quadrature import Quadrature
from pathint.oracles.symbols import HamiltonianSymbol, Ordering

log = getLogger(__name__)

type ComplexArray = NDArray[np.complex128]
type PhaseFn = Callable[[NDArray[np.float64], NDArray[np.float64]], NDArray]

TAIL_TOLERANCE = 1e-8


@cache
def _annihilation(dim: int) -> ComplexArray:
    matrix = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)
    matrix.flags.writeable = False
    return matrix


@dataclass(frozen=True, slots=True, eq=False)
class StateVector:
    """Components of a state in the truncated number basis."""

    components: ComplexArray

    def __post_init__(self) -> None:
        """Validate the components."""
        values = np.asarray(self.components, dtype=complex)
        if values.ndim != 1 or not np.all(np.isfinite(values)):
            raise ValueError("StateVector needs a finite 1-D component array")
        object.__setattr__(self, "components", values)

    @property
    def dim(self) -> int:
        """Truncation dimension."""
        return self.components.size

    def norm(self) -> float:
        """Euclidean norm."""
        return float(np.linalg.norm(self.components))

    def inner(self, other: StateVector) -> complex:
        """Return `<self|other>`."""
        return complex(np.vdot(self.components, other.components))

    def expectation(self, operator: OperatorMatrix) -> complex:
        """Return `<self|A|self>`."""
        return complex(np.vdot(self.components, operator.matrix @ self.components))


@dataclass(frozen=True, slots=True, eq=False)
class OperatorMatrix:
    """A `D x D` operator; a `hermitian` flag is verified on construction."""

    matrix: ComplexArray
    hermitian: bool = False

    def __post_init__(self) -> None:
        """Check shape and, when flagged, hermiticity.

        Raises:
            NotHermitian: If flagged hermitian but not within 1e-12.
        """
        matrix = np.asarray(self.matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError("OperatorMatrix must be square")
        if self.hermitian:
            scale = max(1.0, float(np.max(np.abs(matrix))))
            if np.max(np.abs(matrix - matrix.conj().T)) > 1e-12 * scale:
                raise NotHermitian("Matrix flagged hermitian is not")
        object.__setattr__(self, "matrix", matrix)

    @property
    def dim(self) -> int:
        """Truncation dimension."""
        return self.matrix.shape[0]

    def adjoint(self) -> OperatorMatrix:
        """Conjugate transpose."""
        return OperatorMatrix(self.matrix.conj().T, self.hermitian)

    def block(self, size: int) -> ComplexArray:
        """Leading `size x size` block."""
        return self.matrix[:size, :size]

    @overload
    def __matmul__(self, other: OperatorMatrix) -> OperatorMatrix: ...

    @overload
    def __matmul__(self, other: StateVector) -> StateVector: ...

    def __matmul__(
        self, other: OperatorMatrix | StateVector
    ) -> OperatorMatrix | StateVector:
        if isinstance(other, StateVector):
            return StateVector(self.matrix @ other.components)
        if isinstance(other, OperatorMatrix):
            return OperatorMatrix(self.matrix @ other.matrix)
        return NotImplemented

    def element(self, bra: StateVector, ket: StateVector) -> complex:
        """Return `<bra|A|ket>`."""
        return complex(np.vdot(bra.components, self.matrix @ ket.components))


@dataclass(frozen=True, slots=True)
class FockSpace:
    """Number basis truncated to `dim` levels with Planck constant `hbar`.

    Operator statements are trusted on the block `n <= dim // 4`.
    """

    dim: int
    hbar: float = 1.0

    def __post_init__(self) -> None:
        """Validate the truncation."""
        if self.dim < 2:
            raise ValueError("FockSpace needs dim >= 2")
        if self.hbar <= 0:
            raise ValueError("hbar must be positive")

    @property
    def trusted_dim(self) -> int:
        """Size of the trusted block."""
        return self.dim // 4 + 1

    def annihilation(self) -> OperatorMatrix:
        """Lowering operator `a`."""
        return OperatorMatrix(_annihilation(self.dim))

    def number(self) -> OperatorMatrix:
        """Number operator."""
        return OperatorMatrix(np.diag(np.arange(self.dim, dtype=complex)), True)

    def identity(self) -> OperatorMatrix:
        """Identity."""
        return OperatorMatrix(np.eye(self.dim, dtype=complex), True)

    def position(self) -> OperatorMatrix:
        """`Q = sqrt(hbar/2) (a + a^dagger)`."""
        a = _annihilation(self.dim)
        return OperatorMatrix(math.sqrt(self.hbar / 2) * (a + a.T), True)

    def momentum(self) -> OperatorMatrix:
        """`P = i sqrt(hbar/2) (a^dagger - a)`."""
        a = _annihilation(self.dim)
        return OperatorMatrix(1j * math.sqrt(self.hbar / 2) * (a.T - a), True)

    def number_state(self, n: int) -> StateVector:
        """Number eigenstate `|n>`."""
        if not 0 <= n < self.dim:
            raise ValueError(f"Level {n} outside the truncation")
        components = np.zeros(self.dim, dtype=complex)
        components[n] = 1.0
        return StateVector(components)

    def vacuum(self) -> StateVector:
        """The fiducial vector, annihilated by `Q + iP`."""
        return self.number_state(0)

    def alpha(self, p: ArrayLike, q: ArrayLike) -> NDArray[np.complex128]:
        """Complex label `(q + i p) / sqrt(2 hbar)`."""
        return (np.asarray(q) + 1j * np.asarray(p)) / math.sqrt(2 * self.hbar)

    def tail_mass(self, p: float, q: float) -> float:
        """Probability weight of `|p,q>` beyond the truncation."""
        return float(poisson.sf(self.dim - 1, abs(complex(self.alpha(p, q))) ** 2))

    def check_truncation(
        self, p: float, q: float, tolerance: float = TAIL_TOLERANCE
    ) -> None:
        """Raise when `|p,q>` does not fit in the truncation.

        Raises:
            TruncationInsufficient: If the tail mass exceeds `tolerance`.
        """
        tail = self.tail_mass(p, q)
        if tail > tolerance:
            raise TruncationInsufficient(
                f"Coherent state ({p}, {q}) leaves {tail:.2e} beyond dim={self.dim}"
            )


def coherent_components(
    p: ArrayLike, q: ArrayLike, space: FockSpace
) -> NDArray[np.complex128]:
    """Number-basis components `<n|p,q>` for arrays of labels.

    Returns:
        NDArray[np.complex128]: Shape `(*labels.shape, dim)`.
    """
    p_arr = np.asarray(p, dtype=float)
    q_arr = np.asarray(q, dtype=float)
    alpha = space.alpha(p_arr, q_arr)[..., np.newaxis]
    ratios = np.ones((*alpha.shape[:-1], space.dim), dtype=complex)
    ratios[..., 1:] = alpha / np.sqrt(np.arange(1, space.dim))
    powers = np.cumprod(ratios, axis=-1)
    phase = np.exp(
        -1j * p_arr * q_arr / (2 * space.hbar) - 0.5 * np.abs(alpha[..., 0]) ** 2
    )
    return powers * phase[..., np.newaxis]


def coherent_vector(p: float, q: float, space: FockSpace) -> StateVector:
    """Canonical coherent state `|p,q> = U[p,q]|0>`.

    Raises:
        TruncationInsufficient: If the state does not fit in the truncation.
    """
    space.check_truncation(p, q)
    return StateVector(coherent_components(p, q, space))


def weyl_operator(p: float, q: float, space: FockSpace) -> OperatorMatrix:
    """`U[p,q] = exp(-i p q / 2 hbar) exp(i (p Q - q P) / hbar)` by matrix exponential.

    Raises:
        TruncationInsufficient: If `|p,q>` does not fit in the truncation.
    """
    space.check_truncation(p, q)
    shift = p * space.position().matrix - q * space.momentum().matrix
    generator = 1j * shift / space.hbar
    phase = cmath.exp(-1j * p * q / (2 * space.hbar))
    return OperatorMatrix(phase * expm(generator))


def weyl_operator_product(p: float, q: float, space: FockSpace) -> OperatorMatrix:
    """`exp(-i q P / hbar) exp(i p Q / hbar)`, the factorized form of `U[p,q]`.

    Raises:
        TruncationInsufficient: If `|p,q>` does not fit in the truncation.
    """
    space.check_truncation(p, q)
    shift = expm(-1j * q * space.momentum().matrix / space.hbar)
    boost = expm(1j * p * space.position().matrix / space.hbar)
    return OperatorMatrix(shift @ boost)


def cs_overlap_closed_form(
    p2: float, q2: float, p1: float, q1: float, hbar: float = 1.0
) -> complex:
    """`<p2,q2|p1,q1>` for the ground-state fiducial."""
    dp, dq = p2 - p1, q2 - q1
    return cmath.exp(
        1j * (p2 + p1) * dq / (2 * hbar) - (dp * dp + dq * dq) / (4 * hbar)
    )


def rotation_oracle(
    p2: float,
    q2: float,
    p1: float,
    q1: float,
    T: float,
    hbar: float = 1.0,
    shift: float = 0.0,
) -> ComplexAmplitude:
    """`<p2,q2| exp(-i T (N + shift)) |p1,q1>` in closed form.

    `shift = 0` is the propagator of the normal-ordered oscillator, `shift = 1`
    the anti-normal one (symbol `(p^2+q^2)/2`, operator `hbar (N + 1)`).
    """
    a2 = (q2 + 1j * p2) / math.sqrt(2 * hbar)
    a1 = (q1 + 1j * p1) / math.sqrt(2 * hbar)
    exponent = (
        1j * (p2 * q2 - p1 * q1) / (2 * hbar)
        - 0.5 * abs(a2) ** 2
        - 0.5 * abs(a1) ** 2
        + a2.conjugate() * a1 * cmath.exp(-1j * T)
        - 1j * T * shift
    )
    return ComplexAmplitude(cmath.exp(exponent))


def _default_radius(space: FockSpace, degree: int) -> float:
    return math.sqrt(2 * space.hbar * (space.dim + 2 * degree + 40))


def antinormal_quantize_function(
    fn: PhaseFn,
    space: FockSpace,
    radius: float,
    *,
    degree: int = 0,
    tolerance: float = 1e-7,
    max_order: int = 1024,
) -> ComplexArray:
    """Return `int f(p,q) |p,q><p,q| dp dq / (2 pi hbar)` over a disk.

    The radial Gauss-Legendre order starts at 64 and doubles until the trusted
    block moves by less than `tolerance`.

    Raises:
        QuadratureNotConverged: If `max_order` is reached first.
    """
    n_angular = 2 * space.dim + 2 * degree + 8
    block = space.trusted_dim
    previous: ComplexArray | None = None
    order = 64
    while order <= max_order:
        rule = Quadrature.disk(radius, order, n_angular)
        p, q = rule.nodes[:, 0], rule.nodes[:, 1]
        vectors = coherent_components(p, q, space)
        weights = rule.weights * fn(p, q) / (2 * math.pi * space.hbar)
        matrix = (vectors * weights[:, np.newaxis]).T @ vectors.conj()
        if previous is not None:
            gap = matrix[:block, :block] - previous[:block, :block]
            change = float(np.max(np.abs(gap)))
            log.debug("Anti-normal quadrature order=%d change=%.3e", order, change)
            if change <= tolerance:
                return matrix
        previous = matrix
        order *= 2
    raise QuadratureNotConverged(
        f"Anti-normal quadrature still moving at radial order {max_order}"
    )


def antinormal_quantize(
    symbol: HamiltonianSymbol,
    space: FockSpace,
    radius: float | None = None,
    **kwargs,
) -> OperatorMatrix:
    """Anti-normal quantization of a real polynomial symbol.

    Args:
        symbol (HamiltonianSymbol): Polynomial symbol.
        space (FockSpace): Truncated number basis.
        radius (float | None): Disk radius; defaults to a radius at which the
            Gaussian tail of every retained level is negligible.
        **kwargs: Forwarded to `antinormal_quantize_function`.

    Returns:
        OperatorMatrix: Hermitian operator.

    Raises:
        ValueError: If the symbol is not tagged anti-normal.
        QuadratureNotConverged: From the quadrature refinement.
    """
    if symbol.ordering is not Ordering.ANTINORMAL:
        raise ValueError("antinormal_quantize expects an anti-normal symbol")
    if not symbol.is_polynomial:
        raise ValueError("antinormal_quantize needs a polynomial symbol")
    if radius is None:
        radius = _default_radius(space, symbol.degree)
    matrix = antinormal_quantize_function(
        lambda p, q: symbol(p, q), space, radius, degree=symbol.degree, **kwargs
    )
    return OperatorMatrix(0.5 * (matrix + matrix.conj().T), hermitian=True)


def matrix_propagator(H: OperatorMatrix, T: float, hbar: float = 1.0) -> OperatorMatrix:
    """`exp(-i T H / hbar)` by eigendecomposition.

    Raises:
        NotHermitian: If `H` is not flagged hermitian.
    """
    if not H.hermitian:
        raise NotHermitian("matrix_propagator needs a hermitian generator")
    energies, vectors = eigh(H.matrix)
    phases = np.exp(-1j * T * energies / hbar)
    return OperatorMatrix((vectors * phases) @ vectors.conj().T)


def propagator_element(
    H: OperatorMatrix,
    T: float,
    pins: tuple[float, float, float, float],
    space: FockSpace,
) -> ComplexAmplitude:
    """`<p2,q2| exp(-i T H / hbar) |p1,q1>` with pins `(p2, q2, p1, q1)`."""
    p2, q2, p1, q1 = pins
    evolved = matrix_propagator(H, T, space.hbar) @ coherent_vector(p1, q1, space)
    return ComplexAmplitude(coherent_vector(p2, q2, space).inner(evolved))


def antinormal_exponential_residual(
    r: float, s: float, space: FockSpace, radius: float = 12.0
) -> float:
    """Check the anti-normal quantization of `exp(i (s q - r p) / hbar)`.

    The operator side is `exp(-(r - i s) a / sqrt(2 hbar)) exp((r + i s) a^dagger /
    sqrt(2 hbar))`; the symbol side is the disk quadrature. Returns the largest
    deviation on the trusted block.
    """
    a = _annihilation(space.dim)
    scale = math.sqrt(2 * space.hbar)
    lhs = expm(-(r - 1j * s) * a / scale) @ expm((r + 1j * s) * a.T / scale)
    rhs = antinormal_quantize_function(
        lambda p, q: np.exp(1j * (s * q - r * p) / space.hbar), space, radius
    )
    block = space.trusted_dim
    return float(np.max(np.abs(lhs[:block, :block] - rhs[:block, :block])))


@dataclass(frozen=True, slots=True)
class FockOracle:
    """Propagator matrix elements of one quantized symbol."""

    space: FockSpace
    operator: OperatorMatrix

    @classmethod
    def for_symbol(cls, symbol: HamiltonianSymbol, space: FockSpace) -> Self:
        """Quantize an anti-normal symbol once and keep the operator."""
        return cls(space, antinormal_quantize(symbol, space))

    def __call__(
        self, pins: tuple[float, float, float, float], T: float
    ) -> ComplexAmplitude:
        """Matrix element between coherent states for duration `T`."""
        return propagator_element(self.operator, T, pins, self.space)
