import numpy as np
import pytest

from pathint.oracles.symbols import HamiltonianSymbol, Ordering, antinormal_from_weyl


def test_from_terms_builds_coefficient_array():
    H = HamiltonianSymbol.from_terms({(2, 0): 0.5, (0, 4): 1.0})
    assert H.degree == 4
    assert H.term(2, 0) == 0.5
    assert not H.is_quadratic
    assert H.is_separable
    assert H(np.array(2.0), np.array(1.0)) == pytest.approx(3.0)


def test_oscillator_classification():
    H = HamiltonianSymbol.oscillator()
    assert H.is_quadratic
    assert not H.is_momentum_only
    assert HamiltonianSymbol.free().is_momentum_only
    assert HamiltonianSymbol.constant(0.0).is_zero


def test_symbols_accept_complex_arguments():
    H = HamiltonianSymbol.oscillator()
    assert complex(H(1j, 1.0)) == pytest.approx(0.0)


def test_relativistic_symbol_is_not_polynomial():
    H = HamiltonianSymbol.relativistic(1.0)
    assert not H.is_polynomial
    assert H.is_momentum_only
    assert float(np.real(H(np.array(0.0), np.array(5.0)))) == pytest.approx(1.0)


def test_equality_respects_ordering():
    weyl = HamiltonianSymbol.oscillator(ordering=Ordering.WEYL)
    assert weyl != HamiltonianSymbol.oscillator()
    assert weyl == weyl.with_ordering(Ordering.WEYL)


def test_weyl_to_antinormal_subtracts_half_hbar_for_the_oscillator():
    weyl = HamiltonianSymbol.oscillator(ordering=Ordering.WEYL)
    converted = antinormal_from_weyl(weyl, hbar=2.0)
    assert converted.ordering is Ordering.ANTINORMAL
    assert converted.term(0, 0) == pytest.approx(-1.0)
    assert converted.term(2, 0) == pytest.approx(0.5)


def test_weyl_to_antinormal_for_quartic():
    weyl = HamiltonianSymbol.from_terms({(0, 4): 1.0}, ordering=Ordering.WEYL)
    converted = antinormal_from_weyl(weyl)
    # exp(-(1/4) d^2/dq^2) q^4 = q^4 - 3 q^2 + 3/4
    assert converted.term(0, 4) == pytest.approx(1.0)
    assert converted.term(0, 2) == pytest.approx(-3.0)
    assert converted.term(0, 0) == pytest.approx(0.75)


def test_antinormal_from_weyl_needs_a_weyl_symbol():
    with pytest.raises(ValueError):
        antinormal_from_weyl(HamiltonianSymbol.oscillator())


def test_laplacian_and_addition():
    H = HamiltonianSymbol.from_terms({(2, 0): 1.0, (0, 2): 3.0})
    assert H.laplacian().term(0, 0) == pytest.approx(8.0)
    total = H + HamiltonianSymbol.constant(1.0)
    assert total.term(0, 0) == pytest.approx(1.0)
