"""Continuous-time regularization with a pinned phase-space Wiener measure.

Amplitudes are evaluated at finite diffusion `nu` and lattice size `N` as a
chain of two-dimensional heat kernels carrying the phase
`exp{(i/hbar)[int p dq - int H dt]}`, then extrapolated to `nu -> inf`.
"""

import math
import warnings
from collections.abc import Callable, Sequence
from dataclasses import dataclass, replace
from enum import StrEnum
from functools import partial
from logging import getLogger

import numpy as np
from numpy.polynomial.laguerre import laggauss
from numpy.typing import NDArray
from scipy.signal import convolve2d
from scipy.special import gamma

from pathint.core.errors import (
    ExtrapolationError,
    NonMonotoneWarning,
    QuadratureNotConverged,
    TailUnbounded,
    UnsupportedSymbol,
    VarianceExplosionWarning,
)
from pathint.core.estimate import PropagatorEstimate, SampleStatistics
from pathint.core.numerics import (
    ComplexAmplitude,
    GaussianKernel,
    TimeLattice,
    compose_power,
)
from pathint.core.paths import iter_bridge_blocks, left_point_sums, stratonovich_sums
from pathint.core.streams import BLOCK_SIZE, RandomStream
from pathint.oracles.fock import cs_overlap_closed_form
from pathint.oracles.symbols import HamiltonianSymbol, Ordering
from pathint.schemes.coherent import (
    MAX_DIRECT_LINKS,
    Pins,
    chain_box_rule,
    link_variables,
    phase_space_chain,
    symbol_expression,
)

log = getLogger(__name__)

type PhaseFunction = Callable[[NDArray, NDArray], NDArray]

N_RULE_FACTOR = 32
MIN_MC_SAMPLES = 10_000
VARIANCE_LIMIT = 0.1
DEFAULT_ALPHAS = (0.25, 0.5, 1.0, 2.0, 4.0)
MOMENT_TOLERANCE = 1e-8


class PdqRule(StrEnum):
    """Discretization of the stochastic integral `int p dq`."""

    STRATONOVICH = "stratonovich"
    LEFT_POINT = "left_point"


class Prefactor(StrEnum):
    """Normalization replacing `exp(nu T / 2 hbar)` on the lattice."""

    LATTICE = "lattice"
    CONTINUUM = "continuum"
    NONE = "none"


class ExtrapolationModel(StrEnum):
    """Large-`nu` model fitted by `dk_extrapolate`."""

    INVERSE = "inverse"
    SQRT = "sqrt"


@dataclass(frozen=True, slots=True)
class DKConfig:
    """One regularized amplitude `K_nu(p'', q''; p', q')` on a time lattice.

    `pins` are `(p'', q'', p', q')`. With `phase=False` the chain carries only
    the Wiener transition kernels, so its value is the mass of the pinned
    measure.
    """

    H: HamiltonianSymbol
    nu: float
    lattice: TimeLattice
    pins: Pins
    hbar: float = 1.0
    rule: PdqRule = PdqRule.STRATONOVICH
    prefactor: Prefactor = Prefactor.LATTICE
    phase: bool = True

    def __post_init__(self) -> None:
        """Validate diffusion and symbol tag."""
        if not self.nu > 0:
            raise ValueError("DKConfig.nu must be positive")
        if not self.hbar > 0:
            raise ValueError("DKConfig.hbar must be positive")
        if self.H.ordering is not Ordering.ANTINORMAL:
            raise ValueError("DKConfig needs an anti-normal symbol")
        object.__setattr__(self, "pins", tuple(float(v) for v in self.pins))
        object.__setattr__(self, "rule", PdqRule(self.rule))
        object.__setattr__(self, "prefactor", Prefactor(self.prefactor))

    @property
    def T(self) -> float:
        """Duration of the lattice."""
        return self.lattice.duration

    def with_nu(self, nu: float, n: int) -> DKConfig:
        """Same configuration at another diffusion and lattice size."""
        lattice = TimeLattice(self.lattice.t_start, self.lattice.t_end, n)
        return replace(self, nu=float(nu), lattice=lattice)


def n_rule(nu: float, T: float, hbar: float = 1.0) -> int:
    """Lattice size `ceil(32 nu T / hbar)`, keeping the per-step spread fixed."""
    return max(1, math.ceil(N_RULE_FACTOR * nu * T / hbar))


def prefactor_value(cfg: DKConfig) -> float:
    """Normalization multiplying the regularized amplitude."""
    match cfg.prefactor:
        case Prefactor.LATTICE:
            step = 1 + cfg.nu * cfg.lattice.eps / (2 * cfg.hbar)
            return step**cfg.lattice.n_links
        case Prefactor.CONTINUUM:
            return math.exp(cfg.nu * cfg.T / (2 * cfg.hbar))
        case Prefactor.NONE:
            return 1.0


def heat_mass(cfg: DKConfig) -> float:
    """Two-dimensional heat kernel between the pins over the full duration."""
    p2, q2, p1, q1 = cfg.pins
    spread = cfg.nu * cfg.T
    return math.exp(-((p2 - p1) ** 2 + (q2 - q1) ** 2) / (2 * spread)) / (
        2 * math.pi * spread
    )


def dk_link_kernel(cfg: DKConfig) -> GaussianKernel:
    """One link: Wiener transition kernel times the midpoint phase.

    Raises:
        UnsupportedSymbol: If `H` is not quadratic.
    """
    eps = cfg.lattice.eps
    p_out, q_out, p_in, q_in = link_variables()
    dp, dq = p_out - p_in, q_out - q_in
    exponent = (dp * dp + dq * dq) * (-1 / (2 * cfg.nu * eps))
    if cfg.phase:
        p_mid, q_mid = (p_out + p_in) * 0.5, (q_out + q_in) * 0.5
        area = (p_mid if cfg.rule is PdqRule.STRATONOVICH else p_in) * dq
        energy = symbol_expression(cfg.H, p_mid, q_mid) * eps
        exponent = exponent + (area - energy) * (1j / cfg.hbar)
    return GaussianKernel.from_expression(1 / (2 * math.pi * cfg.nu * eps), exponent)


def _link_values(
    cfg: DKConfig, p_out: NDArray, q_out: NDArray, p_in: NDArray, q_in: NDArray
) -> NDArray[np.complex128]:
    eps = cfg.lattice.eps
    dp, dq = p_out - p_in, q_out - q_in
    exponent = -(dp * dp + dq * dq) / (2 * cfg.nu * eps) + 0j
    if cfg.phase:
        p_mid, q_mid = (p_out + p_in) / 2, (q_out + q_in) / 2
        area = (p_mid if cfg.rule is PdqRule.STRATONOVICH else p_in) * dq
        exponent = exponent + 1j * (area - eps * cfg.H(p_mid, q_mid)) / cfg.hbar
    return np.exp(exponent) / (2 * math.pi * cfg.nu * eps)


def _direct_amplitude(cfg: DKConfig, tolerance: float) -> complex:
    spread = 7 * math.sqrt(max(cfg.hbar, cfg.nu * cfg.T / 4))
    width = min(math.sqrt(cfg.hbar), math.sqrt(cfg.nu * cfg.lattice.eps))
    link = partial(_link_values, cfg)
    coarse, fine = (
        phase_space_chain(
            link,
            cfg.lattice.n,
            cfg.pins,
            chain_box_rule(cfg.pins, spread, width, order),
            1.0,
        )
        for order in (6, 8)
    )
    if abs(fine - coarse) > tolerance * max(abs(fine), 1e-300):
        raise QuadratureNotConverged(
            f"Regularized chain moved by {abs(fine - coarse):.2e}"
        )
    return fine


def dk_lattice_amplitude(cfg: DKConfig, *, tolerance: float = 1e-6) -> ComplexAmplitude:
    """Regularized amplitude at finite `nu` and `N`.

    Quadratic symbols compose the `N + 1` Gaussian links in closed form;
    other symbols are integrated directly for at most three interior points.
    The result carries `2 pi hbar` and the configured prefactor unless the
    phase is switched off.

    Raises:
        CompositionDiverges: If a Gaussian composition does not converge.
        UnsupportedSymbol: For non-quadratic symbols on long lattices.
        QuadratureNotConverged: If the direct route does not settle.
    """
    p2, q2, p1, q1 = cfg.pins
    if cfg.H.is_quadratic or not cfg.phase:
        kernel = compose_power(dk_link_kernel(cfg), cfg.lattice.n_links)
        value = complex(kernel(np.array([p2, q2]), np.array([p1, q1])))
    elif cfg.lattice.n_links <= MAX_DIRECT_LINKS:
        value = _direct_amplitude(cfg, tolerance)
    else:
        raise UnsupportedSymbol(
            f"Non-quadratic symbols need at most {MAX_DIRECT_LINKS - 1} interior points"
        )
    if cfg.phase:
        value *= 2 * math.pi * cfg.hbar * prefactor_value(cfg)
    log.debug("Regularized amplitude nu=%g N=%d value=%s", cfg.nu, cfg.lattice.n, value)
    return ComplexAmplitude(value)


def rule_gap(cfg: DKConfig, n_list: Sequence[int]) -> list[float]:
    """`|K_stratonovich - K_left_point|` at fixed `nu` for each lattice size."""
    gaps = []
    for n in n_list:
        base = cfg.with_nu(cfg.nu, n)
        midpoint = dk_lattice_amplitude(replace(base, rule=PdqRule.STRATONOVICH))
        left = dk_lattice_amplitude(replace(base, rule=PdqRule.LEFT_POINT))
        gaps.append(abs(midpoint.value - left.value))
    return gaps


def _design(nu: NDArray[np.float64], model: ExtrapolationModel, terms: int) -> NDArray:
    match model:
        case ExtrapolationModel.INVERSE:
            columns = [np.ones_like(nu), 1 / nu, 1 / nu**2]
        case ExtrapolationModel.SQRT:
            columns = [np.ones_like(nu), 1 / np.sqrt(nu), 1 / nu]
    return np.column_stack(columns[:terms])


def dk_extrapolate(
    template: DKConfig,
    nu_list: Sequence[float],
    rule: Callable[[float, float, float], int] = n_rule,
    *,
    model: ExtrapolationModel | str = ExtrapolationModel.INVERSE,
    oracle: complex | None = None,
) -> PropagatorEstimate:
    """Extrapolate the regularized amplitude to `nu -> inf`.

    Each `nu` is evaluated on a lattice of `rule(nu, T, hbar)` points. The
    amplitudes are fitted by least squares with a three-term model in `1/nu`;
    the error bar is the gap between that extrapolant and the two-term one.

    Args:
        template (DKConfig): Configuration whose `nu` and lattice size vary.
        nu_list (Sequence[float]): Strictly increasing diffusion constants.
        rule (Callable[[float, float, float], int]): Lattice size per `nu`.
        model (ExtrapolationModel | str): `inverse` fits `A + B/nu + C/nu^2`,
            `sqrt` fits `A + B/sqrt(nu) + C/nu`.
        oracle (complex | None): Reference for the monotonicity warning.

    Returns:
        PropagatorEstimate: Extrapolant with the model gap as its error bar.

    Raises:
        ExtrapolationError: For fewer than three values of `nu`.
        ValueError: If `nu_list` is not strictly increasing.
    """
    model = ExtrapolationModel(model)
    if len(nu_list) < 3:
        raise ExtrapolationError("dk_extrapolate needs at least three values of nu")
    if any(b <= a for a, b in zip(nu_list, nu_list[1:], strict=False)):
        raise ValueError("nu_list must increase strictly")
    nu = np.asarray(nu_list, dtype=float)
    sizes = [rule(float(v), template.T, template.hbar) for v in nu]
    values = np.array(
        [
            dk_lattice_amplitude(template.with_nu(v, n)).value
            for v, n in zip(nu, sizes, strict=True)
        ]
    )
    if oracle is not None:
        errors = np.abs(values - oracle)
        if np.any(np.diff(errors) >= 0):
            warnings.warn(
                f"Regularized error is not decreasing in nu: {errors.tolist()}",
                NonMonotoneWarning,
                stacklevel=2,
            )
    full, residuals, *_ = np.linalg.lstsq(_design(nu, model, 3), values, rcond=None)
    reduced, *_ = np.linalg.lstsq(_design(nu, model, 2), values, rcond=None)
    fit_residual = 0.0
    if residuals.size:
        fit_residual = float(np.sqrt(residuals.sum() / (nu.size - 3)))
    gap = abs(complex(full[0]) - complex(reduced[0]))
    log.info(
        "Extrapolation over nu=%s: %s (model %s, gap %.2e)",
        nu.tolist(),
        complex(full[0]),
        model,
        gap,
    )
    return PropagatorEstimate(
        ComplexAmplitude(complex(full[0])),
        gap,
        "dk",
        {
            "model": str(model),
            "nu_list": nu.tolist(),
            "n_list": sizes,
            "fit_residual": fit_residual,
            "prefactor": str(template.prefactor),
        },
    )


def dk_mc_crosscheck(
    cfg: DKConfig,
    n_samples: int,
    stream: RandomStream,
    *,
    block_size: int = BLOCK_SIZE,
    oracle_scale: float | None = None,
) -> PropagatorEstimate:
    """Monte Carlo estimate over independent pinned `(p, q)` bridges.

    Each bridge contributes `exp{(i/hbar)[sum p dq - eps sum H(mid)]}`; the
    mean is multiplied by the heat mass, `2 pi hbar` and the prefactor.

    Raises:
        ValueError: For fewer than `MIN_MC_SAMPLES` samples.
    """
    if n_samples < MIN_MC_SAMPLES:
        raise ValueError(f"dk_mc_crosscheck needs at least {MIN_MC_SAMPLES} samples")
    p2, q2, p1, q1 = cfg.pins
    weight = heat_mass(cfg) * 2 * math.pi * cfg.hbar * prefactor_value(cfg)
    scale = (
        oracle_scale
        if oracle_scale is not None
        else abs(cs_overlap_closed_form(p2, q2, p1, q1, cfg.hbar))
    )
    if weight / math.sqrt(n_samples) > VARIANCE_LIMIT * scale:
        warnings.warn(
            f"Predicted stderr {weight / math.sqrt(n_samples):.3g} exceeds "
            f"{VARIANCE_LIMIT:.0%} of the amplitude scale {scale:.3g}",
            VarianceExplosionWarning,
            stacklevel=2,
        )
    area_sums = (
        stratonovich_sums if cfg.rule is PdqRule.STRATONOVICH else left_point_sums
    )
    eps = cfg.lattice.eps
    stats = SampleStatistics()
    for paths in iter_bridge_blocks(
        cfg.nu,
        cfg.lattice,
        [p1, q1],
        [p2, q2],
        n_samples,
        stream,
        block_size=block_size,
    ):
        p, q = paths[..., 0], paths[..., 1]
        p_mid = (p[:, 1:] + p[:, :-1]) / 2
        q_mid = (q[:, 1:] + q[:, :-1]) / 2
        energy = np.sum(cfg.H(p_mid, q_mid), axis=-1)
        stats.add_block(np.exp(1j * (area_sums(p, q) - eps * energy) / cfg.hbar))
    log.debug(
        "Regularized Monte Carlo n=%d mean=%s stderr=%.2e",
        stats.count,
        stats.mean,
        stats.stderr,
    )
    return PropagatorEstimate(
        ComplexAmplitude(weight * stats.mean),
        weight * stats.stderr,
        "dk-mc",
        {
            "nu": cfg.nu,
            "n": cfg.lattice.n,
            "rule": str(cfg.rule),
            "samples": n_samples,
            "seed": stream.seed,
            "stream": stream.stream_index,
        },
    )


@dataclass(frozen=True, slots=True)
class AssumptionReport:
    """Outcome of the moment conditions on a symbol.

    `c_heuristic` is a non-rigorous flag: polynomial with a semibounded
    leading form. It does not enter `verdict`.
    """

    integral_a: tuple[tuple[float, float], ...]
    beta: float
    integral_b: float
    c_heuristic: bool
    verdict: bool
    closed_form_gap: float | None = None

    @property
    def failed_alphas(self) -> list[float]:
        """Values of `alpha` where the first integral diverges."""
        return [alpha for alpha, value in self.integral_a if not math.isfinite(value)]


def gaussian_moment(coefficients: NDArray[np.float64], alpha: float) -> float:
    """`int sum c[i, j] p^i q^j exp(-alpha (p^2 + q^2)) dp dq` in closed form."""
    total = 0.0
    for (i, j), value in np.ndenumerate(coefficients):
        if value == 0 or i % 2 or j % 2:
            continue
        moment = gamma((i + 1) / 2) * gamma((j + 1) / 2)
        total += value * moment / alpha ** ((i + j) / 2 + 1)
    return float(total)


def _radial_integral(
    fn: PhaseFunction, alpha: float, *, order: int = 64, n_angular: int = 64
) -> float:
    """`int fn(p, q) exp(-alpha r^2) dp dq` on Gauss-Laguerre nodes in `alpha r^2`.

    Returns `inf` when the weighted integrand grows toward the outer nodes.

    Raises:
        TailUnbounded: If the integrand neither decays nor grows conclusively.
    """
    u, w = laggauss(order)
    theta = 2 * math.pi * np.arange(n_angular) / n_angular
    r = np.sqrt(u / alpha)[:, np.newaxis]
    with np.errstate(over="ignore", invalid="ignore"):
        values = np.asarray(fn(r * np.sin(theta), r * np.cos(theta)), dtype=float)
        ring = values.mean(axis=1)
        weighted = np.abs(values).mean(axis=1) * np.exp(-u)
    if not np.all(np.isfinite(weighted)):
        return math.inf
    peak = float(weighted.max())
    if peak == 0:
        return 0.0
    if weighted[-1] >= weighted[-2] and weighted[-1] >= 1e-8 * peak:
        return math.inf
    if weighted[-1] > 1e-8 * peak:
        raise TailUnbounded(
            f"Integrand at u={u[-1]:.0f} is {weighted[-1] / peak:.2e} of its peak"
        )
    return float(math.pi * np.sum(w * ring) / alpha)


def _leading_form_semibounded(H: HamiltonianSymbol, n_angles: int = 720) -> bool:
    if H.kinetic is not None:
        return False
    degree = H.degree
    if degree <= 0:
        return True
    theta = 2 * math.pi * np.arange(n_angles) / n_angles
    s, c = np.sin(theta), np.cos(theta)
    form = np.zeros_like(theta)
    for (i, j), value in np.ndenumerate(H.coefficients):
        if i + j == degree:
            form += value * s**i * c**j
    return bool(form.min() >= -1e-12 * max(1.0, float(np.abs(form).max())))


def dk_assumption_check(
    H: HamiltonianSymbol | PhaseFunction,
    hbar: float = 1.0,
    alpha_grid: Sequence[float] = DEFAULT_ALPHAS,
    beta: float = 0.4,
) -> AssumptionReport:
    """Check the moment conditions on `H`.

    Requires `int H^2 exp(-alpha r^2) < inf` for every alpha and
    `int H^4 exp(-beta r^2) < inf`.

    Polynomial symbols are cross-checked against closed-form Gaussian moments;
    the relative gap must stay within `MOMENT_TOLERANCE`.

    Args:
        H (HamiltonianSymbol | PhaseFunction): Symbol or vectorized function.
        hbar (float): Reduced Planck constant.
        alpha_grid (Sequence[float]): Positive exponents for the first integral.
        beta (float): Exponent for the second integral, below `1 / (2 hbar)`.

    Returns:
        AssumptionReport: Integrals, heuristic flag and verdict.

    Raises:
        ValueError: If `beta` is not in `(0, 1 / (2 hbar))` or an alpha is not
            positive.
        TailUnbounded: If decay cannot be decided.
        QuadratureNotConverged: If the quadrature misses the closed-form
            moments of a polynomial symbol.
    """
    if not 0 < beta < 1 / (2 * hbar):
        raise ValueError(f"beta must lie in (0, {1 / (2 * hbar):g})")
    if any(alpha <= 0 for alpha in alpha_grid):
        raise ValueError("alpha_grid must be positive")
    integral_a = tuple(
        (float(alpha), _radial_integral(lambda p, q: H(p, q) ** 2, alpha))
        for alpha in alpha_grid
    )
    integral_b = _radial_integral(lambda p, q: H(p, q) ** 4, beta)
    gap = None
    heuristic = False
    if isinstance(H, HamiltonianSymbol):
        heuristic = _leading_form_semibounded(H)
        if H.is_polynomial:
            square = convolve2d(H.coefficients, H.coefficients)
            quartic = convolve2d(square, square)
            exact = [gaussian_moment(square, alpha) for alpha, _ in integral_a]
            exact.append(gaussian_moment(quartic, beta))
            numeric = [value for _, value in integral_a] + [integral_b]
            gap = max(
                abs(n - e) / max(abs(e), 1e-300)
                for n, e in zip(numeric, exact, strict=True)
            )
            if gap > MOMENT_TOLERANCE:
                raise QuadratureNotConverged(
                    f"Moment quadrature is {gap:.2e} away from the closed form"
                )
    verdict = all(math.isfinite(value) for _, value in integral_a) and math.isfinite(
        integral_b
    )
    report = AssumptionReport(
        integral_a, float(beta), integral_b, heuristic, verdict, gap
    )
    log.info(
        "Assumption check verdict=%s failed alphas=%s heuristic=%s",
        verdict,
        report.failed_alphas,
        heuristic,
    )
    return report
