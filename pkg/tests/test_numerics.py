import cmath
import math

import numpy as np
import pytest

from pathint.core.errors import CompositionDiverges
from pathint.core.numerics import (
    ComplexAmplitude,
    GaussianKernel,
    QuadraticExpression,
    TimeLattice,
    Unit,
    compose_chain,
    compose_gaussian,
    compose_power,
)
from pathint.oracles.closed_form import (
    free_kernel,
    free_propagator,
    heat_gaussian_kernel,
)


def test_amplitude_rejects_non_finite():
    with pytest.raises(ValueError):
        ComplexAmplitude(complex(math.inf, 0))


def test_amplitude_units_must_match_on_addition():
    a = ComplexAmplitude(1.0, Unit.INVERSE_LENGTH)
    b = ComplexAmplitude(2.0, Unit.DIMENSIONLESS)
    with pytest.raises(ValueError):
        a + b


def test_relative_error_against_zero_falls_back_to_modulus():
    assert ComplexAmplitude(3 + 4j).relative_error(0) == pytest.approx(5.0)


def test_time_lattice_counts_links():
    lattice = TimeLattice.from_duration(2.0, 3)
    assert lattice.n_links == 4
    assert lattice.eps == pytest.approx(0.5)
    assert lattice.times().tolist() == pytest.approx([0.0, 0.5, 1.0, 1.5, 2.0])
    assert lattice.refined().n == 6


@pytest.mark.parametrize("n", [0, -1])
def test_time_lattice_needs_interior_points(n):
    with pytest.raises(ValueError):
        TimeLattice.from_duration(1.0, n)


def test_quadratic_expression_products():
    x = QuadraticExpression.linear_form([1.0, 0.0])
    y = QuadraticExpression.linear_form([0.0, 1.0])
    expr = (x + 1.0) * (y - 2.0)
    point = np.array([0.3, -0.7])
    assert complex(expr(point)) == pytest.approx((0.3 + 1.0) * (-0.7 - 2.0))
    with pytest.raises(ValueError):
        (x * y) * x


def test_heat_kernels_compose_to_longer_time():
    composed = compose_gaussian(heat_gaussian_kernel(0.4), heat_gaussian_kernel(0.6))
    direct = heat_gaussian_kernel(1.0)
    for x2, x1 in [(0.0, 0.0), (0.5, -1.2), (2.0, 1.0)]:
        expected = complex(direct(x2, x1))
        assert complex(composed(x2, x1)) == pytest.approx(expected, rel=1e-12)


def test_free_kernels_compose_as_fresnel_integrals():
    kernel = compose_power(free_kernel(0.1), 10)
    assert complex(kernel(0.7, -0.2)) == pytest.approx(
        free_propagator(0.7, -0.2, 1.0).value, rel=1e-10
    )


def test_chain_and_power_agree():
    link = heat_gaussian_kernel(0.25)
    chain = compose_chain([link] * 4)
    power = compose_power(link, 4)
    expected = complex(power(0.3, 0.1))
    assert complex(chain(0.3, 0.1)) == pytest.approx(expected, rel=1e-12)


def test_growing_gaussian_does_not_compose():
    growing = GaussianKernel.from_coefficients(1.0, 0.0, 0.0, 1.0)
    with pytest.raises(CompositionDiverges):
        compose_gaussian(growing, GaussianKernel.from_coefficients(1.0, 1.0, 0.0, 0.0))


def test_kernel_amplitude_evaluates_closed_form():
    kernel = GaussianKernel.from_coefficients(2.0, -1.0, 0.5, -0.25, linear=(0.1, 0.0))
    x2, x1 = 0.4, -0.3
    expected = 2.0 * cmath.exp(-(x2**2) + 0.5 * x2 * x1 - 0.25 * x1**2 + 0.1 * x2)
    assert kernel.amplitude(x2, x1).value == pytest.approx(expected)
