"""Per-scheme experiment adapters: which rows to run and how to evaluate one."""

import math
from dataclasses import dataclass, field
from functools import cached_property
from logging import getLogger
from typing import Any, ClassVar

import numpy as np

from pathint.core.estimate import PropagatorEstimate
from pathint.core.grids import PotentialSpec
from pathint.core.numerics import ComplexAmplitude, TimeLattice
from pathint.core.streams import RandomStream
from pathint.harness.config import ExperimentConfig
from pathint.oracles.closed_form import (
    euclidean_oscillator_kernel,
    free_propagator,
    mehler_propagator,
    relativistic_closed_form,
)
from pathint.oracles.fock import FockOracle, FockSpace, rotation_oracle
from pathint.oracles.symbols import HamiltonianSymbol
from pathint.schemes.coherent import cs_lattice_propagator, cs_overlap
from pathint.schemes.dk import (
    DKConfig,
    dk_extrapolate,
    dk_lattice_amplitude,
    dk_mc_crosscheck,
    n_rule,
)
from pathint.schemes.euclidean import (
    CameronSpec,
    cameron_chain_value,
    cameron_closed_form,
    cameron_total_variation,
    cameron_variation_factor,
    fk_bridge_mc,
    fk_transfer_matrix,
)
from pathint.schemes.ito import ItoSpec, ito_propagator
from pathint.schemes.lattice import lattice_chain_quadratic, ps_lattice_q

log = getLogger(__name__)

VALUE_COLUMNS = (
    "re",
    "im",
    "stderr",
    "oracle_re",
    "oracle_im",
    "relative_error",
    "status",
    "message",
)
STOCHASTIC_COLUMNS = ("seed", "stream", "samples")
DEFAULT_BRIDGE_STEPS = 64


@dataclass(frozen=True, slots=True)
class RowSpec:
    """One row to evaluate; `key` orders rows in the output files."""

    key: tuple[Any, ...]
    params: dict[str, Any] = field(default_factory=dict)


@dataclass(slots=True)
class RowOutcome:
    """Value and oracle of one row before it is flattened into columns."""

    value: ComplexAmplitude | PropagatorEstimate
    oracle: complex | None = None
    extras: dict[str, Any] = field(default_factory=dict)

    def columns(self) -> dict[str, Any]:
        """Flatten into output columns (status and message excluded)."""
        if isinstance(self.value, PropagatorEstimate):
            amplitude, stderr = self.value.value, self.value.stderr
        else:
            amplitude, stderr = self.value, None
        row: dict[str, Any] = {
            "re": amplitude.re,
            "im": amplitude.im,
            "stderr": stderr,
            "oracle_re": None,
            "oracle_im": None,
            "relative_error": None,
        }
        if self.oracle is not None:
            row["oracle_re"] = self.oracle.real
            row["oracle_im"] = self.oracle.imag
            row["relative_error"] = amplitude.relative_error(self.oracle)
        row.update(self.extras)
        return row


class Experiment:
    """Base class for scheme adapters."""

    scheme: ClassVar[str] = "experiment"
    description: ClassVar[str] = ""
    parameters: ClassVar[tuple[str, ...]] = ("n",)
    extra_columns: ClassVar[tuple[str, ...]] = ()
    stochastic: ClassVar[bool] = False
    convergence_variable: ClassVar[str] = "n"

    def __init__(self, config: ExperimentConfig) -> None:
        """Bind the adapter to a validated configuration."""
        self.config = config

    @classmethod
    def columns(cls) -> tuple[str, ...]:
        """Fixed CSV column order of this scheme."""
        columns = ("scheme", *cls.parameters, *cls.extra_columns, *VALUE_COLUMNS)
        return columns + STOCHASTIC_COLUMNS if cls.stochastic else columns

    def rows(self) -> list[RowSpec]:
        """Rows to evaluate, in output order."""
        raise NotImplementedError

    def evaluate(self, row: RowSpec) -> RowOutcome:
        """Evaluate one row.

        Raises:
            PathIntegralError: Numeric failures, recorded by the runner.
        """
        raise NotImplementedError

    def convergence_rows(self, rows: list[dict[str, Any]]) -> list[dict[str, Any]]:
        """Rows that enter the convergence fit."""
        return [row for row in rows if row.get("status") != "error"]

    def lattice(self, n: int) -> TimeLattice:
        """Lattice over the configured duration."""
        return TimeLattice.from_duration(self.config.physics.T, n)


def _quadratic_oracle(
    V: PotentialSpec, x2: float, x1: float, T: float, m: float, hbar: float
) -> complex | None:
    c0, c1, c2 = V.polynomial
    if c1 != 0 or c2 < 0:
        return None
    phase = complex(np.exp(-1j * c0 * T / hbar))
    if c2 == 0:
        return free_propagator(x2, x1, T, m, hbar).value * phase
    omega = math.sqrt(2 * c2 / m)
    if not omega * T < math.pi:
        return None
    return mehler_propagator(x2, x1, T, m, omega, hbar).value * phase


class LatticeExperiment(Experiment):
    """Configuration-space lattice for potentials of degree at most two."""

    scheme = "lattice"
    description = "Configuration-space time-sliced propagator, closed-form chain"

    def rows(self) -> list[RowSpec]:
        """One row per lattice size."""
        return [RowSpec((n,), {"n": n}) for n in self.config.numerics.n_list]

    def evaluate(self, row: RowSpec) -> RowOutcome:
        """Closed-form chain against the free or Mehler propagator."""
        phys = self.config.physics
        V = self.config.potential_spec()
        value = lattice_chain_quadratic(
            V,
            self.lattice(row.params["n"]),
            phys.x2,
            phys.x1,
            phys.m,
            phys.hbar,
            damping=self.config.numerics.damping,
        )
        oracle = _quadratic_oracle(V, phys.x2, phys.x1, phys.T, phys.m, phys.hbar)
        return RowOutcome(value, oracle)


class FeynmanKacExperiment(Experiment):
    """Imaginary-time kernel by transfer matrix and by bridge Monte Carlo."""

    scheme = "fk"
    description = "Feynman-Kac kernel: transfer matrix rows plus a bridge Monte Carlo"
    parameters = ("method", "n")
    stochastic = True

    def rows(self) -> list[RowSpec]:
        """Transfer rows per lattice size, then one Monte Carlo row if sampling."""
        num = self.config.numerics
        rows = [
            RowSpec(("transfer", n), {"method": "transfer", "n": n})
            for n in num.n_list
        ]
        if num.samples is not None:
            steps = num.n_steps or DEFAULT_BRIDGE_STEPS
            rows.append(RowSpec(("bridge", steps), {"method": "bridge", "n": steps}))
        return rows

    @cached_property
    def oracle(self) -> complex | None:
        """Euclidean oscillator or heat kernel at the pins."""
        phys = self.config.physics
        V = self.config.potential_spec()
        c0, c1, c2 = V.polynomial
        if c1 != 0 or c2 < 0:
            return None
        omega = math.sqrt(2 * phys.nu * c2)
        value = euclidean_oscillator_kernel(phys.x2, phys.x1, phys.T, phys.nu, omega)
        return complex(value * math.exp(-c0 * phys.T))

    def evaluate(self, row: RowSpec) -> RowOutcome:
        """Evaluate a transfer or Monte Carlo row."""
        phys, num = self.config.physics, self.config.numerics
        V = self.config.potential_spec()
        if row.params["method"] == "bridge":
            stream = RandomStream(num.seed, 0)
            estimate = fk_bridge_mc(
                V,
                phys.nu,
                phys.T,
                phys.x2,
                phys.x1,
                row.params["n"],
                num.samples,
                stream,
            )
            extras = {"seed": num.seed, "stream": 0, "samples": num.samples}
            return RowOutcome(estimate, self.oracle, extras)
        lattice = self.lattice(row.params["n"])
        kernel = fk_transfer_matrix(V, phys.nu, lattice, self.config.grid())
        return RowOutcome(ComplexAmplitude(kernel.at(phys.x2, phys.x1)), self.oracle)

    def convergence_rows(self, rows: list[dict[str, Any]]) -> list[dict[str, Any]]:
        """Transfer rows only."""
        return [r for r in super().convergence_rows(rows) if r["method"] == "transfer"]


class CameronExperiment(Experiment):
    """Complex-diffusion chain and its growing absolute mass."""

    scheme = "cameron"
    description = "Cameron chain: value, closed form and total-variation factor"
    extra_columns = ("factor", "total_variation")

    def rows(self) -> list[RowSpec]:
        """One row per number of links."""
        return [RowSpec((n,), {"n": n}) for n in self.config.numerics.n_list]

    def evaluate(self, row: RowSpec) -> RowOutcome:
        """Chain against closed form, with the variation factor."""
        phys = self.config.physics
        spec = CameronSpec(phys.lam, phys.eps, row.params["n"])
        x2, x1 = phys.x2 or 0.0, phys.x1 or 0.0
        extras = {
            "factor": cameron_variation_factor(spec.lam, spec.n_links),
            "total_variation": cameron_total_variation(spec, x2, x1),
        }
        oracle = cameron_closed_form(spec, x2, x1).value
        return RowOutcome(cameron_chain_value(spec, x2, x1), oracle, extras)


class ItoExperiment(Experiment):
    """Higher-derivative regulator approaching the free propagator."""

    scheme = "ito"
    description = "Ornstein-Uhlenbeck regularized free propagator over increasing nu"
    parameters = ("nu",)
    convergence_variable = "nu"

    def rows(self) -> list[RowSpec]:
        """One row per diffusion constant."""
        return [RowSpec((nu,), {"nu": nu}) for nu in self.config.numerics.nu_list]

    def evaluate(self, row: RowSpec) -> RowOutcome:
        """Closed form at finite nu against the free propagator."""
        phys = self.config.physics
        x = (phys.x2 or 0.0) - (phys.x1 or 0.0)
        value = ito_propagator(ItoSpec(row.params["nu"], phys.m, phys.hbar, phys.T, x))
        oracle = free_propagator(x, 0.0, phys.T, phys.m, phys.hbar).value
        return RowOutcome(value, oracle)


def _symbol_matches(H: HamiltonianSymbol, other: HamiltonianSymbol) -> bool:
    a, b = H.coefficients, other.coefficients
    return H.kinetic is None and a.shape == b.shape and bool(np.allclose(a, b, atol=0))


class PhaseSpaceLatticeExperiment(Experiment):
    """Phase-space lattice with pinned positions."""

    scheme = "ps-lattice"
    description = "Phase-space lattice in q-representation, incl. relativistic symbols"

    def rows(self) -> list[RowSpec]:
        """One row per lattice size."""
        return [RowSpec((n,), {"n": n}) for n in self.config.numerics.n_list]

    @cached_property
    def oracle(self) -> complex | None:
        """Closed form for relativistic, free or oscillator symbols."""
        phys = self.config.physics
        H = self.config.hamiltonian()
        if H.kinetic is not None:
            try:
                return relativistic_closed_form(
                    phys.x2 - phys.x1, phys.T, phys.m, phys.hbar
                ).value
            except ValueError:
                return None
        if _symbol_matches(H, HamiltonianSymbol.free(phys.m)):
            return free_propagator(phys.x2, phys.x1, phys.T, phys.m, phys.hbar).value
        if _symbol_matches(H, HamiltonianSymbol.oscillator(phys.omega, phys.m)):
            if phys.omega * phys.T < math.pi:
                return mehler_propagator(
                    phys.x2, phys.x1, phys.T, phys.m, phys.omega, phys.hbar
                ).value
        return None

    def evaluate(self, row: RowSpec) -> RowOutcome:
        """Lattice value against the closed form when one exists."""
        phys = self.config.physics
        H = self.config.hamiltonian()
        lattice = self.lattice(row.params["n"])
        value = ps_lattice_q(H, lattice, phys.x2, phys.x1, phys.hbar)
        return RowOutcome(value, self.oracle)


class CoherentExperiment(Experiment):
    """Coherent-state lattice with the complex-argument symbol."""

    scheme = "cs"
    description = "Coherent-state lattice propagator against the rotation oracle"

    def rows(self) -> list[RowSpec]:
        """One row per lattice size."""
        return [RowSpec((n,), {"n": n}) for n in self.config.numerics.n_list]

    @cached_property
    def oracle(self) -> complex | None:
        """Overlap for `H = 0`, normal-ordered rotation for `(p^2 + q^2) / 2`."""
        phys = self.config.physics
        H = self.config.hamiltonian()
        p2, q2, p1, q1 = self.config.pins()
        if H.kinetic is None and H.is_zero:
            return cs_overlap(p2, q2, p1, q1, phys.hbar).value
        if _symbol_matches(H, HamiltonianSymbol.oscillator()):
            return rotation_oracle(p2, q2, p1, q1, phys.T, phys.hbar, shift=0.0).value
        return None

    def evaluate(self, row: RowSpec) -> RowOutcome:
        """Lattice value against the oracle."""
        H = self.config.hamiltonian()
        lattice = self.lattice(row.params["n"])
        value = cs_lattice_propagator(
            H, lattice, self.config.pins(), self.config.physics.hbar
        )
        return RowOutcome(value, self.oracle)


class DKExperiment(Experiment):
    """Continuous-time regularization: chain per nu, extrapolant, Monte Carlo.

    Monte Carlo rows are judged against the Gaussian chain at the same `nu`
    and lattice, so their error is sampling error alone.
    """

    scheme = "dk"
    description = "Phase-space Wiener regularization over nu with extrapolation"
    parameters = ("method", "nu", "n")
    stochastic = True
    convergence_variable = "nu"

    def rows(self) -> list[RowSpec]:
        """Chain rows, one extrapolation row, and a Monte Carlo row if sampling."""
        num, phys = self.config.numerics, self.config.physics
        rows = [
            RowSpec(
                ("chain", nu),
                {"method": "chain", "nu": nu, "n": n_rule(nu, phys.T, phys.hbar)},
            )
            for nu in num.nu_list
        ]
        if len(num.nu_list) >= 3:
            rows.append(RowSpec(("extrapolated", math.inf), {"method": "extrapolated"}))
        if num.samples is not None:
            nu = num.nu_list[0]
            rows.append(
                RowSpec(
                    ("mc", nu),
                    {"method": "mc", "nu": nu, "n": n_rule(nu, phys.T, phys.hbar)},
                )
            )
        return rows

    @cached_property
    def oracle(self) -> complex:
        """Fock-engine matrix element of the anti-normal operator."""
        phys = self.config.physics
        H = self.config.hamiltonian()
        p2, q2, p1, q1 = self.config.pins()
        if H.kinetic is None and H.is_zero:
            return cs_overlap(p2, q2, p1, q1, phys.hbar).value
        space = FockSpace(self.config.numerics.fock_dim, phys.hbar)
        return FockOracle.for_symbol(H, space)(self.config.pins(), phys.T).value

    def template(self, nu: float, n: int) -> DKConfig:
        """Configuration at one diffusion constant."""
        phys = self.config.physics
        return DKConfig(
            self.config.hamiltonian(),
            nu,
            TimeLattice.from_duration(phys.T, n),
            self.config.pins(),
            phys.hbar,
        )

    def evaluate(self, row: RowSpec) -> RowOutcome:
        """Evaluate a chain, extrapolation or Monte Carlo row."""
        num = self.config.numerics
        match row.params["method"]:
            case "chain":
                cfg = self.template(row.params["nu"], row.params["n"])
                return RowOutcome(dk_lattice_amplitude(cfg), self.oracle)
            case "extrapolated":
                nu0 = num.nu_list[0]
                phys = self.config.physics
                template = self.template(nu0, n_rule(nu0, phys.T, phys.hbar))
                estimate = dk_extrapolate(
                    template, num.nu_list, model=num.model, oracle=self.oracle
                )
                return RowOutcome(estimate, self.oracle)
            case "mc":
                cfg = self.template(row.params["nu"], row.params["n"])
                estimate = dk_mc_crosscheck(cfg, num.samples, RandomStream(num.seed, 0))
                chain = dk_lattice_amplitude(cfg).value
                extras = {"seed": num.seed, "stream": 0, "samples": num.samples}
                return RowOutcome(estimate, chain, extras)
        raise ValueError(f"Unknown row method {row.params['method']!r}")

    def convergence_rows(self, rows: list[dict[str, Any]]) -> list[dict[str, Any]]:
        """Chain rows only."""
        return [r for r in super().convergence_rows(rows) if r["method"] == "chain"]


EXPERIMENTS: dict[str, type[Experiment]] = {
    cls.scheme: cls
    for cls in (
        LatticeExperiment,
        FeynmanKacExperiment,
        CameronExperiment,
        ItoExperiment,
        PhaseSpaceLatticeExperiment,
        CoherentExperiment,
        DKExperiment,
    )
}


def experiment_for(config: ExperimentConfig) -> Experiment:
    """Instantiate the adapter owning the configured scheme."""
    return EXPERIMENTS[config.scheme](config)
