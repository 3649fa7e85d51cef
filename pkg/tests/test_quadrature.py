import math

import numpy as np
import pytest

from pathint.core.errors import GridTruncationWarning, PotentialBoundViolation
from pathint.core.grids import (
    KernelMatrix,
    PotentialKind,
    PotentialSpec,
    SpatialGrid,
    WavefunctionGrid,
    check_grid_truncation,
)
from pathint.core.quadrature import Quadrature


def test_panels_integrate_polynomials_exactly():
    rule = Quadrature.panels(-1.0, 2.0, 0.5, 4)
    assert complex(rule.integrate(rule.nodes**5)) == pytest.approx((2.0**6 - 1.0) / 6)


def test_trapezoid_weights_sum_to_length():
    assert Quadrature.trapezoid(0.0, 3.0, 31).weights.sum() == pytest.approx(3.0)


def test_disk_rule_area_and_second_moment():
    rule = Quadrature.disk(2.0, 16, 32, center=(1.0, -1.0))
    assert rule.weights.sum() == pytest.approx(4 * math.pi)
    r2 = (rule.nodes[:, 0] - 1.0) ** 2 + (rule.nodes[:, 1] + 1.0) ** 2
    assert complex(rule.integrate(r2)).real == pytest.approx(8 * math.pi)


def test_tensor_rule_integrates_products():
    rule = Quadrature.tensor(
        Quadrature.gauss_legendre(0, 1, 6), Quadrature.gauss_legendre(0, 2, 6)
    )
    values = rule.nodes[:, 0] ** 2 * rule.nodes[:, 1]
    assert complex(rule.integrate(values)).real == pytest.approx(2 / 3)


def test_spatial_grid_nodes_and_lookup():
    grid = SpatialGrid(-1.0, 1.0, 21)
    assert grid.spacing == pytest.approx(0.1)
    assert grid.index_of(0.04) == 10
    ones = WavefunctionGrid.from_function(grid, np.ones_like)
    assert ones.mass() == pytest.approx(2.0)


def test_kernel_matrix_shape_is_checked():
    with pytest.raises(ValueError):
        KernelMatrix(SpatialGrid(0, 1, 3), np.zeros((2, 2)))


def test_truncation_warning_for_mass_at_the_edge():
    grid = SpatialGrid(-1.0, 1.0, 11)
    with pytest.warns(GridTruncationWarning):
        check_grid_truncation(KernelMatrix(grid, np.ones((11, 11))))


def test_potential_spec_kinds():
    assert PotentialSpec.harmonic(2.0, 0.5).polynomial == (0.0, 0.0, 1.0)
    assert PotentialSpec.constant(3.0).is_constant
    square = PotentialSpec.quadratic(1.0, 2.0, 1.0)
    assert square.polynomial_minimum() == pytest.approx(0.0)
    table = PotentialSpec.tabulated([0.0, 1.0], [1.0, 3.0])
    assert table.kind is PotentialKind.TABULATED
    assert table(np.array([0.5, 5.0])).tolist() == pytest.approx([2.0, 3.0])


def test_potential_below_bound_is_rejected():
    with pytest.raises(PotentialBoundViolation):
        PotentialSpec.tabulated([0.0, 1.0], [0.0, -1.0], lower_bound=0.0)
    with pytest.raises(ValueError):
        PotentialSpec(PotentialKind.LINEAR, (1.0, 2.0, 3.0))
