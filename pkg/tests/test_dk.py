import math
from dataclasses import replace

import numpy as np
import pytest

from pathint.core.errors import (
    ExtrapolationError,
    QuadratureNotConverged,
    UnsupportedSymbol,
)
from pathint.core.numerics import TimeLattice
from pathint.core.streams import RandomStream
from pathint.oracles.fock import FockOracle, FockSpace, rotation_oracle
from pathint.oracles.symbols import HamiltonianSymbol, Ordering
from pathint.schemes import dk
from pathint.schemes.coherent import cs_overlap
from pathint.schemes.dk import (
    DKConfig,
    Prefactor,
    dk_assumption_check,
    dk_extrapolate,
    dk_lattice_amplitude,
    dk_link_kernel,
    dk_mc_crosscheck,
    gaussian_moment,
    heat_mass,
    n_rule,
    prefactor_value,
    rule_gap,
)

PINS = (1.0, 0.0, 0.0, 1.0)
NU_LIST = [4.0, 8.0, 16.0, 32.0, 64.0]


def config(H: HamiltonianSymbol, nu: float, n: int, **kwargs) -> DKConfig:
    return DKConfig(H, nu, TimeLattice.from_duration(1.0, n), PINS, **kwargs)


def test_lattice_size_rule():
    assert n_rule(8.0, 1.0) == 256
    assert n_rule(1e-6, 1.0) == 1


def test_config_validation():
    with pytest.raises(ValueError):
        config(HamiltonianSymbol.oscillator(ordering=Ordering.WEYL), 4.0, 8)
    with pytest.raises(ValueError):
        config(HamiltonianSymbol.oscillator(), 0.0, 8)
    cfg = config(HamiltonianSymbol.oscillator(), 4.0, 8, prefactor="continuum")
    assert cfg.prefactor is Prefactor.CONTINUUM
    assert cfg.with_nu(8.0, 16).lattice.n == 16


def test_prefactors_agree_on_fine_lattices():
    cfg = config(HamiltonianSymbol.constant(0.0), 4.0, 4096)
    lattice = prefactor_value(cfg)
    continuum = prefactor_value(replace(cfg, prefactor=Prefactor.CONTINUUM))
    assert lattice == pytest.approx(continuum, rel=1e-2)
    assert prefactor_value(replace(cfg, prefactor=Prefactor.NONE)) == 1.0


def test_unweighted_chain_is_the_heat_kernel():
    cfg = config(HamiltonianSymbol.oscillator(), 2.0, 32, phase=False)
    assert dk_lattice_amplitude(cfg).value == pytest.approx(heat_mass(cfg), rel=1e-10)


def test_zero_symbol_approaches_the_overlap():
    cfg = config(HamiltonianSymbol.constant(0.0), 8.0, 256)
    overlap = cs_overlap(*PINS)
    error = dk_lattice_amplitude(cfg).relative_error(overlap)
    assert error <= 0.02
    lattice = TimeLattice.from_duration(1.0, 128)
    coarse = dk_lattice_amplitude(replace(cfg, nu=4.0, lattice=lattice))
    assert error < coarse.relative_error(overlap)


def test_oscillator_approach_is_monotone():
    oracle = rotation_oracle(*PINS, 1.0, shift=1.0)
    H = HamiltonianSymbol.oscillator()
    errors = [
        dk_lattice_amplitude(config(H, nu, 512)).relative_error(oracle)
        for nu in (4.0, 8.0, 16.0, 32.0)
    ]
    assert all(b < a for a, b in zip(errors, errors[1:], strict=False))


def test_extrapolation_reaches_the_overlap():
    template = config(HamiltonianSymbol.constant(0.0), NU_LIST[0], 128)
    estimate = dk_extrapolate(template, NU_LIST, oracle=cs_overlap(*PINS).value)
    assert estimate.value.relative_error(cs_overlap(*PINS)) <= 0.005
    assert estimate.parameters["n_list"] == [n_rule(nu, 1.0) for nu in NU_LIST]


@pytest.mark.parametrize(
    "H",
    [
        HamiltonianSymbol.oscillator(),
        HamiltonianSymbol.from_terms({(2, 0): 0.5, (0, 2): 0.5, (0, 1): 0.3}),
    ],
)
def test_extrapolation_reaches_the_fock_oracle(H):
    oracle = FockOracle.for_symbol(H, FockSpace(60))(PINS, 1.0)
    estimate = dk_extrapolate(config(H, NU_LIST[0], 128), NU_LIST)
    assert estimate.value.relative_error(oracle) <= 0.01


def test_extrapolation_needs_three_increasing_values():
    template = config(HamiltonianSymbol.constant(0.0), 4.0, 8)
    with pytest.raises(ExtrapolationError):
        dk_extrapolate(template, [4.0, 8.0])
    with pytest.raises(ValueError):
        dk_extrapolate(template, [4.0, 16.0, 8.0])


def test_non_quadratic_symbols():
    H = HamiltonianSymbol.from_terms({(0, 4): 0.01})
    with pytest.raises(UnsupportedSymbol):
        dk_link_kernel(config(H, 2.0, 2))
    with pytest.raises(UnsupportedSymbol):
        dk_lattice_amplitude(config(H, 2.0, 16))
    value = dk_lattice_amplitude(config(H, 0.5, 1), tolerance=1e-4)
    assert math.isfinite(abs(value.value))


def test_rule_gap_is_reported_per_lattice():
    gaps = rule_gap(config(HamiltonianSymbol.oscillator(), 4.0, 8), [8, 32])
    assert len(gaps) == 2
    assert all(gap > 0 for gap in gaps)


def test_monte_carlo_matches_chain():
    cfg = config(HamiltonianSymbol.oscillator(), 4.0, 16)
    estimate = dk_mc_crosscheck(cfg, 20_000, RandomStream(11))
    chain = dk_lattice_amplitude(cfg).value
    assert abs(estimate.value.value - chain) <= 4 * estimate.stderr
    assert estimate.parameters["samples"] == 20_000


def test_monte_carlo_stderr_shrinks_like_root_n():
    cfg = config(HamiltonianSymbol.oscillator(), 4.0, 16)
    small = dk_mc_crosscheck(cfg, 10_000, RandomStream(21))
    large = dk_mc_crosscheck(cfg, 40_000, RandomStream(22))
    assert small.stderr / large.stderr == pytest.approx(2.0, rel=0.2)


def test_amplitude_without_prefactor_decays_at_half_the_duration():
    nus = np.array([4.0, 8.0, 16.0, 32.0])
    H = HamiltonianSymbol.constant(0.0)
    amplitudes = [
        dk_lattice_amplitude(config(H, nu, n_rule(nu, 1.0), prefactor="none")).value
        for nu in nus
    ]
    slope, _ = np.polyfit(nus, np.log(np.abs(amplitudes)), 1)
    assert slope == pytest.approx(-0.5, rel=0.02)


def test_monte_carlo_needs_enough_samples(stream):
    with pytest.raises(ValueError):
        dk_mc_crosscheck(config(HamiltonianSymbol.oscillator(), 4.0, 16), 100, stream)


@pytest.mark.slow
@pytest.mark.parametrize(
    "H", [HamiltonianSymbol.constant(0.0), HamiltonianSymbol.oscillator()]
)
def test_monte_carlo_at_acceptance_scale(H):
    cfg = config(H, 4.0, 128)
    estimate = dk_mc_crosscheck(cfg, 100_000, RandomStream(20240917))
    chain = dk_lattice_amplitude(cfg).value
    assert abs(estimate.value.value - chain) <= 3 * estimate.stderr


def test_gaussian_moments():
    # int exp(-a r^2) = pi / a, int q^2 exp(-a r^2) = pi / (2 a^2)
    assert gaussian_moment(np.array([[1.0]]), 2.0) == pytest.approx(math.pi / 2)
    q_squared = np.array([[0.0, 0.0, 1.0]])
    assert gaussian_moment(q_squared, 1.0) == pytest.approx(math.pi / 2)


def test_assumptions_hold_for_the_oscillator():
    report = dk_assumption_check(HamiltonianSymbol.oscillator())
    assert report.verdict
    assert report.c_heuristic
    assert report.closed_form_gap <= 1e-8


def test_moment_gap_beyond_tolerance_is_an_error(monkeypatch):
    exact = dk.gaussian_moment

    def skewed(coefficients, alpha):
        return exact(coefficients, alpha) * (1 + 1e-6)

    monkeypatch.setattr(dk, "gaussian_moment", skewed)
    with pytest.raises(QuadratureNotConverged):
        dk_assumption_check(HamiltonianSymbol.oscillator())


def test_assumptions_fail_for_exponential_growth():
    report = dk_assumption_check(lambda p, q: np.exp(p * p + q * q))
    assert not report.verdict
    assert 1.0 in report.failed_alphas


def test_quartic_potential_is_semibounded():
    assert dk_assumption_check(HamiltonianSymbol.from_terms({(0, 4): 1.0})).c_heuristic
    report = dk_assumption_check(HamiltonianSymbol.from_terms({(0, 4): -1.0}))
    assert report.verdict
    assert not report.c_heuristic


def test_assumption_check_validates_exponents():
    with pytest.raises(ValueError):
        dk_assumption_check(HamiltonianSymbol.oscillator(), beta=0.6)
    with pytest.raises(ValueError):
        dk_assumption_check(HamiltonianSymbol.oscillator(), alpha_grid=(0.0, 1.0))
