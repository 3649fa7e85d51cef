import math

import numpy as np
import pytest

from pathint.core.errors import TailUnbounded
from pathint.oracles.closed_form import free_propagator
from pathint.schemes.ito import (
    ItoSpec,
    PiecewiseConstantSource,
    TabulatedFunction,
    f_factor,
    fourier_potential_admissible,
    ito_limit_study,
    ito_mass,
    ito_propagator,
    ou_double_integral,
    ou_generating_functional,
)


def test_f_factor_reference_value():
    assert f_factor(1.0, 1.0).value == pytest.approx(2 * math.exp(-1), rel=1e-12)


def test_f_factor_series_branch_matches_closed_form():
    a, T = 0.3 - 0.2j, 1.0
    closed = 2 * T / a - (2 / a**2) * (1 - np.exp(-a * T))
    assert f_factor(a, T).value == pytest.approx(closed, rel=1e-12)


def test_f_factor_small_time_expansion():
    T = 1e-3
    assert abs(f_factor(1.0, T).value - T * T) <= T**3 / 3 + 1e-9 * T * T


def test_f_factor_needs_positive_time():
    with pytest.raises(ValueError):
        f_factor(1.0, 0.0)


def test_ou_rate_has_positive_real_part():
    for nu in (1e-3, 1.0, 1e6):
        assert ItoSpec(nu).a.real > 0


@pytest.mark.parametrize("x", [0.0, 1.0])
def test_large_nu_recovers_free_propagator(x):
    value = ito_propagator(ItoSpec(1e4, x=x))
    assert value.relative_error(free_propagator(x, 0.0, 1.0)) <= 0.02


def test_limit_study_is_monotone_with_negative_slope():
    study = ito_limit_study([1e2, 1e3, 1e4, 1e5])
    assert study.monotone
    assert study.slope <= -0.4
    assert len(study.rows) == 4


def test_limit_study_needs_increasing_nu():
    with pytest.raises(ValueError):
        ito_limit_study([10.0, 1.0])


def test_propagator_integrates_to_one():
    assert ito_mass(ItoSpec(50.0)) == pytest.approx(1.0, abs=1e-12)


def test_generating_functional_of_vanishing_source():
    value = ou_generating_functional(PiecewiseConstantSource.zero(), 10.0, 1 - 1j)
    assert value.value == 1


def test_split_source_integrates_like_a_single_piece():
    a = 1.3 - 0.4j
    whole = ou_double_integral(PiecewiseConstantSource.constant(0.7, 2.0), a)
    split = ou_double_integral(PiecewiseConstantSource((0.0, 0.5, 2.0), (0.7, 0.7)), a)
    assert split == pytest.approx(whole, rel=1e-12)
    assert whole == pytest.approx(0.49 * f_factor(a, 2.0).value, rel=1e-12)


def test_source_addition_refines_breakpoints():
    late = PiecewiseConstantSource((0.5, 1.5), (2.0,))
    total = PiecewiseConstantSource.constant(1.0, 1.0) + late
    assert total.breakpoints == (0.0, 0.5, 1.0, 1.5)
    assert total.values == (1.0, 3.0, 2.0)


def test_generating_functional_needs_positive_rate():
    with pytest.raises(ValueError):
        ou_generating_functional(PiecewiseConstantSource.zero(), 1.0, -1.0)


def test_gaussian_density_is_admissible():
    table = TabulatedFunction.from_function(lambda s: np.exp(-s * s), 8.0, 401)
    report = fourier_potential_admissible(table)
    assert report.admissible
    assert report.integral == pytest.approx(math.sqrt(math.pi), rel=1e-6)


def test_lorentzian_density_is_admissible():
    report = fourier_potential_admissible(
        TabulatedFunction.from_function(lambda s: 1 / (1 + s * s), 200.0, 4001)
    )
    assert report.admissible
    assert report.decay_exponents[1] == pytest.approx(2.0, rel=0.05)
    assert report.integral == pytest.approx(math.pi, rel=1e-3)


def test_slow_decay_is_not_admissible():
    report = fourier_potential_admissible(
        TabulatedFunction.from_function(lambda s: 1 / np.sqrt(1 + s * s), 200.0, 4001)
    )
    assert not report.admissible


def test_flat_table_is_unbounded():
    with pytest.raises(TailUnbounded):
        table = TabulatedFunction.from_function(np.ones_like, 10.0, 101)
        fourier_potential_admissible(table)
