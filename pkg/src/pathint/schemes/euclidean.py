"""Imaginary-time propagation: Feynman-Kac weighting and Cameron's diagnostic."""

import cmath
import math
from dataclasses import dataclass
from logging import getLogger
from typing import Self

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import trapezoid

from pathint.core.estimate import PropagatorEstimate, SampleStatistics
from pathint.core.grids import (
    KernelMatrix,
    PotentialSpec,
    SpatialGrid,
    WavefunctionGrid,
    check_grid_truncation,
)
from pathint.core.numerics import (
    ComplexAmplitude,
    GaussianKernel,
    TimeLattice,
    Unit,
    compose_power,
)
from pathint.core.paths import iter_bridge_blocks
from pathint.core.streams import BLOCK_SIZE, RandomStream
from pathint.oracles.closed_form import heat_kernel

log = getLogger(__name__)

MIN_BRIDGE_SAMPLES = 100


def heat_step_matrix(eps: float, nu: float, grid: SpatialGrid) -> NDArray[np.float64]:
    """Heat kernel `W(x_i, x_j; eps)` between grid nodes."""
    x = grid.nodes
    return np.asarray(heat_kernel(x[:, np.newaxis], x[np.newaxis, :], eps, nu))


def fk_transfer_matrix(
    V: PotentialSpec, nu: float, lattice: TimeLattice, grid: SpatialGrid
) -> KernelMatrix:
    """Feynman-Kac kernel as a product of weighted heat-kernel steps.

    Each link carries the heat kernel of duration `eps` times `exp(-eps V)` at
    its left node, so the kernel is `M (D M)^n` with `D` the trapezoid weights.

    Raises:
        PotentialBoundViolation: If `V` dips below its bound on the grid.
    """
    V.check_bounded(grid)
    eps = lattice.eps
    step = heat_step_matrix(eps, nu, grid) * np.exp(-eps * V(grid.nodes))[np.newaxis, :]
    weighted = grid.weights[:, np.newaxis] * step
    kernel = step @ np.linalg.matrix_power(weighted, lattice.n)
    result = KernelMatrix(
        grid,
        kernel,
        {"scheme": "fk-transfer", "n": lattice.n, "eps": eps, "nu": nu},
    )
    check_grid_truncation(result)
    return result


def apply_euclidean_propagator(
    W: KernelMatrix, rho: WavefunctionGrid
) -> WavefunctionGrid:
    """Evolve a density with a Feynman-Kac kernel by grid quadrature.

    Raises:
        ValueError: If kernel and density live on different grids.
    """
    if W.grid != rho.grid:
        raise ValueError(
            f"Kernel grid {W.grid} does not match density grid {rho.grid}"
        )
    return W.apply(rho)


def fk_bridge_mc(
    V: PotentialSpec,
    nu: float,
    T: float,
    x2: float,
    x1: float,
    n_steps: int,
    n_samples: int,
    stream: RandomStream,
    *,
    block_size: int = BLOCK_SIZE,
) -> PropagatorEstimate:
    """Feynman-Kac kernel by Monte Carlo over pinned Brownian bridges.

    The estimate is the heat kernel times the bridge mean of `exp(-int V dt)`,
    with the time integral taken by the trapezoid rule on the `n_steps + 1`
    lattice nodes. Blocks are merged in block order, so the result depends
    only on the stream key.

    Raises:
        ValueError: For fewer than `MIN_BRIDGE_SAMPLES` samples.
    """
    if n_samples < MIN_BRIDGE_SAMPLES:
        raise ValueError(f"fk_bridge_mc needs at least {MIN_BRIDGE_SAMPLES} samples")
    lattice = TimeLattice.from_duration(T, n_steps - 1)
    stats = SampleStatistics()
    for paths in iter_bridge_blocks(
        nu, lattice, [x1], [x2], n_samples, stream, block_size=block_size
    ):
        action = trapezoid(V(paths[..., 0]), dx=lattice.eps, axis=-1)
        stats.add_block(np.exp(-action))
    weight = float(heat_kernel(x2, x1, T, nu))
    log.debug(
        "Bridge MC n=%d mean=%.6g stderr=%.2e",
        stats.count,
        stats.mean.real,
        stats.stderr,
    )
    return PropagatorEstimate(
        ComplexAmplitude(weight * stats.mean.real, Unit.INVERSE_LENGTH),
        weight * stats.stderr,
        "fk-bridge",
        {
            "nu": nu,
            "T": T,
            "n_steps": n_steps,
            "samples": n_samples,
            "seed": stream.seed,
            "stream": stream.stream_index,
        },
    )


@dataclass(frozen=True, slots=True)
class CameronSpec:
    """Complex-diffusion chain `exp[-(lam / 2 eps) sum (x_{l+1} - x_l)^2]`.

    `n_links` counts the factors of the chain, so there are `n_links - 1`
    interior integrations. `sigma` is the complex diffusion constant the chain
    weight corresponds to, kept for reporting.
    """

    lam: complex
    eps: float
    n_links: int
    sigma: complex | None = None

    def __post_init__(self) -> None:
        """Validate the lattice part; `lam` is checked on evaluation."""
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.n_links < 1:
            raise ValueError("n_links must be positive")
        object.__setattr__(self, "lam", complex(self.lam))

    @classmethod
    def from_diffusion(
        cls, nu: float, eps: float, n_links: int, m: float = 1.0, hbar: float = 1.0
    ) -> Self:
        """Chain of a real diffusion `nu` combined with the kinetic phase."""
        lam = 1.0 / nu - 1j * m / hbar
        return cls(lam, eps, n_links, sigma=1.0 / lam)

    @property
    def duration(self) -> float:
        """Total time `n_links * eps`."""
        return self.n_links * self.eps


def _require_positive_real_part(lam: complex) -> None:
    if not complex(lam).real > 0:
        raise ValueError(f"Cameron chain needs Re(lambda) > 0, got {lam}")


def cameron_link(spec: CameronSpec) -> GaussianKernel:
    """One chain factor as a Gaussian kernel."""
    _require_positive_real_part(spec.lam)
    a = -spec.lam / (2 * spec.eps)
    return GaussianKernel.from_coefficients(
        cmath.sqrt(spec.lam / (2 * math.pi * spec.eps)),
        a,
        -2 * a,
        a,
        unit=Unit.INVERSE_LENGTH,
    )


def cameron_closed_form(spec: CameronSpec, x2: float, x1: float) -> ComplexAmplitude:
    """Right-hand side `(lam / 2 pi T)^(1/2) exp[-(lam / 2T)(x2 - x1)^2]`."""
    _require_positive_real_part(spec.lam)
    T = spec.duration
    value = cmath.sqrt(spec.lam / (2 * math.pi * T)) * cmath.exp(
        -spec.lam * (x2 - x1) ** 2 / (2 * T)
    )
    return ComplexAmplitude(value, Unit.INVERSE_LENGTH)


def cameron_chain_value(spec: CameronSpec, x2: float, x1: float) -> ComplexAmplitude:
    """Evaluate the chain by composing its links.

    Raises:
        ValueError: If `Re(lam) <= 0`.
    """
    return compose_power(cameron_link(spec), spec.n_links).amplitude(x2, x1)


def cameron_variation_factor(lam: complex, n_links: int) -> float:
    """`(|lam| / Re lam)^(n/2)`, the growth of the chain's absolute mass.

    Raises:
        ValueError: If `Re(lam) <= 0`.
    """
    _require_positive_real_part(lam)
    lam = complex(lam)
    return (abs(lam) / lam.real) ** (n_links / 2)


def cameron_diverges(lam: complex) -> bool:
    """True when the absolute mass is unbounded as the chain is refined."""
    _require_positive_real_part(lam)
    return complex(lam).imag != 0


def cameron_total_variation(spec: CameronSpec, x2: float, x1: float) -> float:
    """Integral of the modulus of the chain integrand.

    Equals `cameron_variation_factor` times the real chain with `Re(lam)`.
    """
    factor = cameron_variation_factor(spec.lam, spec.n_links)
    real = spec.lam.real
    T = spec.duration
    spread = math.exp(-real * (x2 - x1) ** 2 / (2 * T))
    mass = math.sqrt(real / (2 * math.pi * T)) * spread
    return factor * mass
