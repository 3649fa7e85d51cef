import cmath
import math

import numpy as np
import pytest

from pathint.core.errors import GridTruncationWarning, UnsupportedSymbol
from pathint.core.grids import PotentialSpec, SpatialGrid, WavefunctionGrid
from pathint.core.numerics import TimeLattice
from pathint.core.quadrature import Quadrature
from pathint.oracles.closed_form import (
    damped_relativistic_kernel,
    free_kernel,
    free_propagator,
    heat_kernel,
    mehler_propagator,
    relativistic_closed_form,
    relativistic_free_propagator,
)
from pathint.oracles.symbols import HamiltonianSymbol
from pathint.schemes.lattice import (
    IntegrationCount,
    Representation,
    composition_check,
    convergence_factor,
    lattice_chain_kernel,
    lattice_chain_quadratic,
    lattice_grid_general,
    ps_lattice_p,
    ps_lattice_q,
)


@pytest.mark.parametrize("n", [1, 10, 100])
def test_free_chain_is_exact(n):
    lattice = TimeLattice(0.0, 1.0, n)
    value = lattice_chain_quadratic(PotentialSpec.zero(), lattice, 0.7, -0.2)
    assert value.relative_error(free_propagator(0.7, -0.2, 1.0)) <= 1e-12


def test_constant_potential_is_a_phase():
    lattice = TimeLattice(0.0, 1.0, 9)
    value = lattice_chain_quadratic(PotentialSpec.constant(0.8), lattice, 0.3, 0.1)
    expected = free_propagator(0.3, 0.1, 1.0).value * cmath.exp(-0.8j)
    assert value.value == pytest.approx(expected, rel=1e-12)


def test_oscillator_chain_converges_to_mehler():
    oracle = mehler_propagator(0.5, 0.2, 1.0)
    V = PotentialSpec.harmonic()
    errors = [
        lattice_chain_quadratic(
            V, TimeLattice(0.0, 1.0, n), 0.5, 0.2
        ).relative_error(oracle)
        for n in (31, 63, 127)
    ]
    assert errors[0] > errors[1] > errors[2]
    assert errors[2] < 1e-2


def test_left_point_chain_is_first_order():
    oracle = mehler_propagator(1.0, 0.0, 1.0)
    V = PotentialSpec.harmonic()
    coarse, fine = (
        lattice_chain_quadratic(V, TimeLattice.from_duration(1.0, links - 1), 1.0, 0.0)
        for links in (64, 128)
    )
    ratio = coarse.relative_error(oracle) / fine.relative_error(oracle)
    assert 1.6 <= ratio <= 2.4
    richardson = 2 * fine.value - coarse.value
    improved = abs(richardson - oracle.value) / abs(oracle.value)
    assert improved < 0.5 * fine.relative_error(oracle)


def test_convergence_factor_only_perturbs_at_finite_n():
    lattice = TimeLattice(0.0, 1.0, 99)
    damped = lattice_chain_quadratic(
        PotentialSpec.zero(), lattice, 0.4, 0.0, damping=convergence_factor(lattice)
    )
    assert convergence_factor(lattice) == pytest.approx(lattice.eps**2)
    assert damped.relative_error(free_propagator(0.4, 0.0, 1.0)) < 1e-2


def test_integration_counts():
    lattice = TimeLattice(0.0, 1.0, 5)
    expected = {
        Representation.CONFIGURATION: IntegrationCount(6, 5),
        Representation.MOMENTUM: IntegrationCount(5, 6),
        Representation.COHERENT: IntegrationCount(5, 5),
    }
    for representation, count in expected.items():
        assert IntegrationCount.for_lattice(representation, lattice) == count


def test_grid_kernel_reports_truncation():
    grid = SpatialGrid(-4.0, 4.0, 81)
    with pytest.warns(GridTruncationWarning):
        kernel = lattice_grid_general(
            PotentialSpec.zero(), TimeLattice(0.0, 1.0, 2), grid
        )
    assert kernel.values.shape == (81, 81)
    assert kernel.metadata["q_integrations"] == 2


@pytest.mark.filterwarnings("ignore::pathint.core.errors.GridTruncationWarning")
def test_grid_kernel_matches_the_closed_form_chain():
    grid = SpatialGrid(-8.0, 8.0, 401)
    lattice = TimeLattice(0.0, 1.0, 4)
    V = PotentialSpec.zero()
    kernel = lattice_grid_general(V, lattice, grid, damping=1.0)
    chain = lattice_chain_kernel(V, lattice, damping=1.0)
    for i, k in [(210, 195), (200, 200), (230, 180)]:
        x2, x1 = grid.nodes[i], grid.nodes[k]
        assert kernel.values[i, k] == pytest.approx(complex(chain(x2, x1)), abs=1e-3)


@pytest.mark.filterwarnings("ignore::pathint.core.errors.GridTruncationWarning")
def test_grid_kernel_preserves_the_norm_of_a_wavepacket():
    grid = SpatialGrid(-8.0, 8.0, 401)
    kernel = lattice_grid_general(
        PotentialSpec.harmonic(), TimeLattice(0.0, 1.0, 4), grid
    )
    packet = WavefunctionGrid.from_function(
        grid, lambda x: np.exp(-((x - 1.0) ** 2) / 2 + 1j * x)
    )
    assert kernel.apply(packet).norm() == pytest.approx(packet.norm(), rel=1e-2)


@pytest.mark.parametrize("n", [1, 8, 64])
def test_phase_space_free_particle_is_exact(n):
    value = ps_lattice_q(HamiltonianSymbol.free(), TimeLattice(0.0, 1.0, n), 0.6, -0.1)
    assert value.relative_error(free_propagator(0.6, -0.1, 1.0)) <= 1e-12


def test_phase_space_oscillator_approaches_mehler():
    oracle = mehler_propagator(0.5, 0.0, 1.0)
    H = HamiltonianSymbol.oscillator()
    coarse = ps_lattice_q(H, TimeLattice(0.0, 1.0, 16), 0.5, 0.0)
    fine = ps_lattice_q(H, TimeLattice(0.0, 1.0, 128), 0.5, 0.0)
    assert fine.relative_error(oracle) < coarse.relative_error(oracle)
    assert fine.relative_error(oracle) < 1e-3


def test_momentum_pinned_oscillator_mirrors_position_pinned():
    lattice = TimeLattice(0.0, 1.0, 12)
    q_form = ps_lattice_q(HamiltonianSymbol.oscillator(), lattice, 0.4, -0.3)
    p_form = ps_lattice_p(HamiltonianSymbol.oscillator(), lattice, 0.4, -0.3)
    assert p_form.value == pytest.approx(q_form.value, rel=1e-12)


def test_momentum_pinned_free_particle_needs_smearing():
    lattice = TimeLattice(0.0, 1.0, 4)
    with pytest.raises(UnsupportedSymbol):
        ps_lattice_p(HamiltonianSymbol.free(), lattice, 0.5, 0.5)
    smeared = ps_lattice_p(HamiltonianSymbol.free(), lattice, 0.5, 0.5, smear=0.1)
    assert abs(smeared.value) == pytest.approx(1 / (0.1 * (2 * cmath.pi) ** 0.5))


def test_momentum_pinned_free_particle_is_the_fourier_transform():
    H = HamiltonianSymbol.free()
    lattice = TimeLattice(0.0, 1.0, 3)
    sigma, p, smear = 2.0, 0.7, 0.1
    # both sides smoothed by a Gaussian of width sigma in position
    ks = Quadrature.panels(p - 5.0, p + 5.0, 0.5)
    delta_weights = np.array(
        [ps_lattice_p(H, lattice, k, k, smear=smear).value for k in ks.nodes]
    ) * (math.sqrt(2 * math.pi) * smear)
    scale = sigma / math.sqrt(2 * math.pi)
    window = scale * np.exp(-((sigma * (ks.nodes - p)) ** 2) / 2)
    momentum_side = complex(ks.integrate(delta_weights * window))
    rs = Quadrature.panels(-12.0, 12.0, 0.25)
    kernel = np.array([ps_lattice_q(H, lattice, r, 0.0).value for r in rs.nodes])
    fourier = np.exp(-1j * p * rs.nodes - rs.nodes**2 / (2 * sigma**2))
    position_side = complex(rs.integrate(kernel * fourier))
    assert position_side == pytest.approx(momentum_side, abs=1e-4)


def test_position_only_symbol_collapses_independently_of_n():
    H = HamiltonianSymbol.from_terms({(0, 2): 0.5})
    values = [
        ps_lattice_p(H, TimeLattice(0.0, 1.0, n), 0.6, -0.1).value for n in (1, 4, 16)
    ]
    assert values[1] == pytest.approx(values[0], rel=1e-12)
    assert values[2] == pytest.approx(values[0], rel=1e-12)
    assert values[0] == pytest.approx(free_propagator(0.6, -0.1, 1.0).value, rel=1e-12)


def test_relativistic_lattice_is_resolution_independent():
    H = HamiltonianSymbol.relativistic(1.0)
    values = [
        ps_lattice_q(H, TimeLattice(0.0, 1.0, n), 0.5, 0.0).value for n in (1, 4, 16)
    ]
    assert values[1] == pytest.approx(values[0], rel=1e-12)
    assert values[2] == pytest.approx(values[0], rel=1e-12)
    oracle = relativistic_free_propagator(0.5, 1.0)
    assert values[0] == pytest.approx(oracle.value, rel=1e-5)
    exact = relativistic_closed_form(0.5, 1.0)
    assert values[0] == pytest.approx(exact.value, rel=2e-3)


def test_non_separable_symbols_are_rejected():
    H = HamiltonianSymbol.from_terms({(2, 0): 0.5, (1, 1): 1.0})
    with pytest.raises(UnsupportedSymbol):
        ps_lattice_q(H, TimeLattice(0.0, 1.0, 2), 0.0, 0.0)


def test_composition_of_gaussian_kernels():
    residual = composition_check(free_kernel, 0.0, 0.4, 1.0, [(0.3, -0.2), (1.0, 1.0)])
    assert residual < 1e-12


def test_composition_on_a_quadrature_rule():
    def kernel(duration):
        return lambda x, y: heat_kernel(x, y, duration)

    rule = Quadrature.panels(-12.0, 12.0, 0.5)
    assert composition_check(kernel, 0.0, 0.5, 1.0, [(0.2, 0.1)], rule) < 1e-10


@pytest.mark.filterwarnings("ignore::pathint.core.errors.GridTruncationWarning")
def test_composition_of_grid_kernels():
    grid = SpatialGrid(-8.0, 8.0, 401)
    V = PotentialSpec.harmonic()

    def kernel(duration):
        links = round(duration / 0.25)
        return lattice_grid_general(
            V, TimeLattice.from_duration(duration, links - 1), grid
        )

    pins = [(0.4, -0.2), (1.0, 0.0)]
    assert composition_check(kernel, 0.0, 0.5, 1.0, pins) < 1e-10


def test_composition_of_damped_relativistic_kernels():
    # damping proportional to the duration adds up under composition
    def kernel(duration):
        return lambda x, y: damped_relativistic_kernel(x - y, duration, 0.2 * duration)

    rule = Quadrature.panels(-10.0, 10.0, 0.2)
    pins = [(0.3, -0.2), (1.5, 0.0)]
    assert composition_check(kernel, 0.0, 0.5, 1.0, pins, rule) <= 1e-4
