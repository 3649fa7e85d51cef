import cmath
import math

import numpy as np
import pytest

from pathint.core.errors import QuadratureNotConverged
from pathint.oracles.closed_form import (
    damped_momentum_integral,
    euclidean_oscillator_kernel,
    euclidean_oscillator_transfer_matrix,
    extrapolate_to_zero,
    free_propagator,
    heat_kernel,
    mehler_propagator,
    relativistic_closed_form,
    relativistic_energy,
    relativistic_free_propagator,
)


def test_free_propagator_modulus_and_phase():
    value = free_propagator(1.0, 0.0, 2.0, m=1.0, hbar=1.0).value
    assert abs(value) == pytest.approx(1 / math.sqrt(4 * math.pi))
    with pytest.raises(ValueError):
        free_propagator(0.0, 0.0, 0.0)


def test_free_propagator_phase_at_the_origin():
    at_rest = free_propagator(0.0, 0.0, 1.0, 1.0, 1.0).value
    assert cmath.phase(at_rest) == pytest.approx(-math.pi / 4, abs=1e-12)
    assert abs(at_rest) == pytest.approx(0.398942, abs=1e-6)
    moved = free_propagator(1.0, 0.0, 1.0).value
    assert cmath.phase(moved) == pytest.approx(0.5 - math.pi / 4, abs=1e-12)


def test_negative_time_is_the_conjugate():
    forward = free_propagator(0.3, 0.1, 1.5).value
    backward = free_propagator(0.3, 0.1, -1.5).value
    assert backward == pytest.approx(forward.conjugate())


def test_mehler_tends_to_free_for_small_omega():
    mehler = mehler_propagator(0.4, -0.3, 1.0, omega=1e-4).value
    assert mehler == pytest.approx(free_propagator(0.4, -0.3, 1.0).value, rel=1e-7)
    with pytest.raises(ValueError):
        mehler_propagator(0.0, 0.0, 4.0)


def test_euclidean_oscillator_reference_value():
    value = euclidean_oscillator_kernel(0.0, 0.0, 1.0, 1.0, 1.0)
    assert value == pytest.approx((2 * math.pi * math.sinh(1.0)) ** -0.5, rel=1e-12)
    assert value == pytest.approx(0.367989, abs=1e-4)


def test_euclidean_oscillator_without_potential_is_the_heat_kernel():
    assert euclidean_oscillator_kernel(0.5, -0.5, 2.0, 0.7, 0.0) == pytest.approx(
        float(heat_kernel(0.5, -0.5, 2.0, 0.7))
    )


def test_transfer_matrix_derivation_matches_mehler_form():
    result = euclidean_oscillator_transfer_matrix(0.3, -0.2, 1.0, 1.0, 1.0)
    expected = euclidean_oscillator_kernel(0.3, -0.2, 1.0)
    assert result.value == pytest.approx(expected, rel=1e-5)
    assert result.n_points > 401


def test_unstable_extrapolation_is_reported():
    with pytest.raises(QuadratureNotConverged):
        extrapolate_to_zero((0.1, 0.05, 0.025), (1.0, 2.0, 10.0))


@pytest.mark.parametrize("dq", [0.0, 0.5, 2.0])
def test_relativistic_quadrature_matches_closed_form(dq):
    damped = relativistic_free_propagator(dq, 1.0, 1.0).value
    exact = relativistic_closed_form(dq, 1.0, 1.0).value
    assert damped == pytest.approx(exact, rel=2e-3)


@pytest.mark.parametrize("dq", [0.0, 0.5])
def test_massless_quadrature_matches_closed_form(dq):
    damped = relativistic_free_propagator(dq, 1.0, 0.0).value
    exact = relativistic_closed_form(dq, 1.0, 0.0).value
    assert damped == pytest.approx(exact, rel=2e-3)


def test_damped_momentum_integral_is_self_converged():
    dq = np.array([0.0, 0.5, 2.0])
    energy = relativistic_energy(1.0)
    base = damped_momentum_integral(dq, energy, 1.0, 0.05)
    refined = damped_momentum_integral(
        dq, energy, 1.0, 0.05, range_factor=2.0, panel_scale=0.5
    )
    np.testing.assert_allclose(refined, base, rtol=0, atol=1e-6)
    coarse = relativistic_free_propagator(0.5, 1.0, 1.0).value
    fine = relativistic_free_propagator(
        0.5, 1.0, 1.0, range_factor=2.0, panel_scale=0.5
    ).value
    assert fine == pytest.approx(coarse, abs=1e-6)


def test_relativistic_closed_form_is_singular_on_the_light_cone():
    with pytest.raises(ValueError):
        relativistic_closed_form(1.0, 1.0)


def test_massless_relativistic_closed_form():
    value = relativistic_closed_form(0.5, 1.0, m=0.0).value
    assert value == pytest.approx(-1j / (math.pi * 0.75))
    assert np.isfinite(value)
