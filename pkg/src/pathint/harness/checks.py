"""Built-in acceptance checks run by `pathint check`."""

import math
import tempfile
from collections.abc import Sequence
from dataclasses import dataclass, field
from logging import getLogger
from pathlib import Path
from typing import Any, ClassVar

import numpy as np

from pathint.core.grids import PotentialSpec, SpatialGrid
from pathint.core.numerics import TimeLattice
from pathint.core.quadrature import Quadrature
from pathint.core.streams import RandomStream
from pathint.harness.config import validate_config
from pathint.harness.report import write_report
from pathint.harness.runner import run_experiment
from pathint.oracles.closed_form import (
    euclidean_oscillator_kernel,
    free_propagator,
    relativistic_free_propagator,
)
from pathint.oracles.fock import (
    FockSpace,
    antinormal_quantize,
    antinormal_quantize_function,
    coherent_vector,
    rotation_oracle,
)
from pathint.oracles.symbols import HamiltonianSymbol, Ordering, antinormal_from_weyl
from pathint.schemes.coherent import (
    CanonicalTransform,
    canonical_phase_check,
    cs_lattice_propagator,
    cs_overlap,
    metric_pullback,
)
from pathint.schemes.dk import (
    DKConfig,
    dk_extrapolate,
    dk_lattice_amplitude,
    dk_mc_crosscheck,
)
from pathint.schemes.euclidean import (
    CameronSpec,
    cameron_chain_value,
    cameron_variation_factor,
    fk_bridge_mc,
    fk_transfer_matrix,
)
from pathint.schemes.ito import ItoSpec, f_factor, ito_limit_study, ito_propagator
from pathint.schemes.lattice import lattice_chain_quadratic, ps_lattice_q

log = getLogger(__name__)

CHECK_SEED = 20240917
DK_PINS = (1.0, 0.0, 0.0, 1.0)
PIN_KEYS = ("p2", "q2", "p1", "q1")


@dataclass(slots=True)
class CheckIssue:
    """A failed expectation inside one check."""

    check: str
    message: str
    details: dict[str, Any] = field(default_factory=dict)


class AcceptanceCheck:
    """Base class for acceptance checks."""

    name: ClassVar[str] = "check"
    description: ClassVar[str] = ""
    slow: ClassVar[bool] = False

    def run(self) -> list[CheckIssue]:
        """Run the check and return its issues."""
        raise NotImplementedError

    def issue(self, message: str, **details: Any) -> CheckIssue:
        """Build an issue attributed to this check."""
        return CheckIssue(self.name, message, details)

    def expect_close(
        self,
        label: str,
        value: complex,
        reference: complex,
        *,
        rel: float = 0,
        abs_: float = 0,
    ) -> list[CheckIssue]:
        """One issue when `|value - reference|` exceeds `max(rel |reference|, abs_)`."""
        gap = abs(complex(value) - complex(reference))
        bound = max(rel * abs(complex(reference)), abs_)
        if gap <= bound:
            return []
        return [self.issue(f"{label}: gap {gap:.3e} > {bound:.3e}", value=str(value))]


class FreeChainCheck(AcceptanceCheck):
    name = "free-chain"
    description = "Closed-form free lattice chain equals the free propagator"

    def run(self) -> list[CheckIssue]:
        exact = free_propagator(0.7, -0.2, 1.0).value
        issues = []
        for n in (1, 10, 100):
            value = lattice_chain_quadratic(
                PotentialSpec.zero(), TimeLattice.from_duration(1.0, n), 0.7, -0.2
            )
            issues += self.expect_close(f"N={n}", value.value, exact, rel=1e-12)
        return issues


class FeynmanKacCheck(AcceptanceCheck):
    name = "fk-oscillator"
    description = "Transfer matrix of V = q^2/2 at (0, 0), T = 1, nu = 1"

    def run(self) -> list[CheckIssue]:
        V = PotentialSpec.harmonic(1.0, 1.0)
        kernel = fk_transfer_matrix(
            V, 1.0, TimeLattice.from_duration(1.0, 256), SpatialGrid(-6.0, 6.0, 601)
        )
        return self.expect_close("transfer", kernel.at(0.0, 0.0), 0.367989, abs_=1e-3)


class FeynmanKacMonteCarloCheck(AcceptanceCheck):
    name = "fk-bridge"
    description = "Bridge Monte Carlo of V = q^2/2 within three standard errors"
    slow = True

    def run(self) -> list[CheckIssue]:
        V = PotentialSpec.harmonic(1.0, 1.0)
        exact = euclidean_oscillator_kernel(0.0, 0.0, 1.0, 1.0, 1.0)
        stream = RandomStream(CHECK_SEED)
        estimate = fk_bridge_mc(V, 1.0, 1.0, 0.0, 0.0, 64, 100_000, stream)
        stderr = estimate.stderr
        issues = self.expect_close(
            "bridge", estimate.value.value, exact, abs_=3 * stderr
        )
        if stderr > 0.01 * exact:
            issues.append(self.issue(f"stderr {stderr:.3e} above 1% of the kernel"))
        return issues


class PositivityCheck(AcceptanceCheck):
    name = "fk-positivity"
    description = "Feynman-Kac kernels are strictly positive"

    def run(self) -> list[CheckIssue]:
        grid = SpatialGrid(-6.0, 6.0, 241)
        inner = np.abs(grid.nodes) <= 4.0
        issues = []
        lattice = TimeLattice.from_duration(1.0, 32)
        potentials = (
            PotentialSpec.zero(),
            PotentialSpec.harmonic(),
            PotentialSpec.quadratic(0.0, 0.5, 0.5),
        )
        for V in potentials:
            for nu in (0.5, 2.0):
                kernel = fk_transfer_matrix(V, nu, lattice, grid)
                values = kernel.values[np.ix_(inner, inner)]
                if not np.all(values > 0):
                    issues.append(self.issue(f"non-positive kernel: {V.kind} nu={nu}"))
        return issues


class CameronCheck(AcceptanceCheck):
    name = "cameron"
    description = "Variation factor 2^(N/4) at lam = 1+i, brute force at N = 2, growth"

    def run(self) -> list[CheckIssue]:
        lam = 1 + 1j
        issues = []
        factors = [cameron_variation_factor(lam, n) for n in range(1, 65)]
        for n, factor in enumerate(factors, start=1):
            issues += self.expect_close(
                f"factor N={n}", factor, 2 ** (n / 4), rel=1e-12
            )
        if any(b <= a for a, b in zip(factors, factors[1:], strict=False)):
            issues.append(self.issue("variation factor is not strictly increasing"))
        spec = CameronSpec(lam, 0.1, 2)
        x2, x1 = 0.3, -0.1
        rule = Quadrature.panels(-6.0, 6.0, 0.25, 16)
        y = rule.nodes
        link = np.sqrt(lam / (2 * math.pi * spec.eps))
        integrand = (
            link**2 * np.exp(-lam / (2 * spec.eps) * ((x2 - y) ** 2 + (y - x1) ** 2))
        )
        brute = complex(rule.integrate(integrand))
        issues += self.expect_close(
            "N=2 brute force", cameron_chain_value(spec, x2, x1).value, brute, abs_=1e-8
        )
        return issues


class ItoLimitCheck(AcceptanceCheck):
    name = "ito-limit"
    description = "Regularized free propagator approaches the free one as nu grows"

    def run(self) -> list[CheckIssue]:
        issues = []
        for x in (0.0, 1.0):
            value = ito_propagator(ItoSpec(1e4, x=x))
            exact = free_propagator(x, 0.0, 1.0).value
            issues += self.expect_close(f"nu=1e4 x={x}", value.value, exact, rel=0.02)
        study = ito_limit_study([1e2, 1e3, 1e4, 1e5])
        if not study.monotone:
            issues.append(self.issue("error is not decreasing", errors=study.errors))
        if study.slope > -0.4:
            issues.append(self.issue(f"slope {study.slope:.3f} above -0.4"))
        issues += self.expect_close(
            "F(1, 1)", f_factor(1.0, 1.0).value, 2 / math.e, abs_=1e-12
        )
        return issues


class RelativisticLatticeCheck(AcceptanceCheck):
    name = "relativistic-lattice"
    description = "Lattice of sqrt(p^2 + 1) is N-independent and matches quadrature"

    def run(self) -> list[CheckIssue]:
        H = HamiltonianSymbol.relativistic(1.0)
        values = [
            ps_lattice_q(H, TimeLattice.from_duration(1.0, n), 0.5, 0.0).value
            for n in (1, 4, 16)
        ]
        issues = []
        for n, value in zip((4, 16), values[1:], strict=True):
            issues += self.expect_close(f"N={n} vs N=1", value, values[0], rel=1e-12)
        oracle = relativistic_free_propagator(0.5, 1.0, 1.0).value
        issues += self.expect_close("damped oracle", values[0], oracle, rel=1e-5)
        return issues


class ResolutionOfUnityCheck(AcceptanceCheck):
    name = "resolution-of-unity"
    description = "Coherent-state quadrature reproduces the identity on n <= 10"

    def run(self) -> list[CheckIssue]:
        space = FockSpace(60)
        matrix = antinormal_quantize_function(lambda p, q: np.ones_like(p), space, 12.0)
        gap = float(np.max(np.abs(matrix[:11, :11] - np.eye(11))))
        if gap > 1e-6:
            return [self.issue(f"identity gap {gap:.3e}")]
        return []


class AntinormalSpectrumCheck(AcceptanceCheck):
    name = "antinormal-spectrum"
    description = "Anti-normal (p^2 + q^2)/2 has spectrum n + 1; Weyl conversion"

    def run(self) -> list[CheckIssue]:
        space = FockSpace(64)
        operator = antinormal_quantize(HamiltonianSymbol.oscillator(), space)
        spectrum = np.linalg.eigvalsh(operator.block(16))
        issues = []
        gap = float(np.max(np.abs(spectrum - np.arange(1, 17))))
        if gap > 1e-6:
            issues.append(self.issue(f"spectrum gap {gap:.3e}"))
        weyl = HamiltonianSymbol.oscillator(ordering=Ordering.WEYL)
        converted = antinormal_from_weyl(weyl)
        expected = HamiltonianSymbol.from_terms(
            {(2, 0): 0.5, (0, 2): 0.5, (0, 0): -0.5}
        )
        gap = np.max(np.abs(converted.coefficients - expected.coefficients))
        if gap > 1e-15:
            issues.append(self.issue(f"Weyl conversion gave {converted!r}"))
        return issues


class CoherentLatticeCheck(AcceptanceCheck):
    name = "cs-lattice"
    description = "Coherent-state lattice converges at first order to the oracle"

    def run(self) -> list[CheckIssue]:
        H = HamiltonianSymbol.oscillator()
        oracle = rotation_oracle(*DK_PINS, 1.0).value
        errors = [
            cs_lattice_propagator(
                H, TimeLattice.from_duration(1.0, n), DK_PINS
            ).relative_error(oracle)
            for n in (128, 256)
        ]
        issues = []
        if errors[0] > 0.02:
            issues.append(self.issue(f"N=128 error {errors[0]:.3e} above 2%"))
        ratio = errors[0] / errors[1]
        if not 1.5 <= ratio <= 2.5:
            issues.append(self.issue(f"error ratio {ratio:.3f} is not about 2"))
        zero = cs_lattice_propagator(
            HamiltonianSymbol.constant(0.0), TimeLattice.from_duration(1.0, 10), DK_PINS
        )
        overlap = cs_overlap(*DK_PINS).value
        issues += self.expect_close("H=0", zero.value, overlap, abs_=1e-12)
        return issues


class MeanValueCheck(AcceptanceCheck):
    name = "mean-values"
    description = "Coherent states have <P> = p and <Q> = q"

    def run(self) -> list[CheckIssue]:
        space = FockSpace(80)
        P, Q = space.momentum(), space.position()
        issues = []
        for p in np.linspace(-4.0, 4.0, 5):
            for q in np.linspace(-4.0, 4.0, 5):
                state = coherent_vector(float(p), float(q), space)
                at = f"at {p},{q}"
                issues += self.expect_close(
                    f"<P> {at}", state.expectation(P), p, abs_=1e-6
                )
                issues += self.expect_close(
                    f"<Q> {at}", state.expectation(Q), q, abs_=1e-6
                )
        return issues


class DKExtrapolationCheck(AcceptanceCheck):
    name = "dk-extrapolation"
    description = "Extrapolated regularized amplitudes match the oracles within 1%"

    def run(self) -> list[CheckIssue]:
        nu_list = [4.0, 8.0, 16.0, 32.0, 64.0]
        cases = (
            (HamiltonianSymbol.constant(0.0), cs_overlap(*DK_PINS).value),
            (
                HamiltonianSymbol.oscillator(),
                rotation_oracle(*DK_PINS, 1.0, shift=1.0).value,
            ),
        )
        lattice = TimeLattice.from_duration(1.0, 128)
        issues = []
        for H, oracle in cases:
            template = DKConfig(H, nu_list[0], lattice, DK_PINS)
            estimate = dk_extrapolate(template, nu_list, oracle=oracle)
            issues += self.expect_close(repr(H), estimate.value.value, oracle, rel=0.01)
        return issues


class DKMonteCarloCheck(AcceptanceCheck):
    name = "dk-monte-carlo"
    description = "Monte Carlo at nu = 4 within three standard errors of the chain"
    slow = True

    def run(self) -> list[CheckIssue]:
        lattice = TimeLattice.from_duration(1.0, 128)
        cfg = DKConfig(HamiltonianSymbol.oscillator(), 4.0, lattice, DK_PINS)
        chain = dk_lattice_amplitude(cfg).value
        estimate = dk_mc_crosscheck(cfg, 100_000, RandomStream(CHECK_SEED))
        return self.expect_close(
            "Monte Carlo", estimate.value.value, chain, abs_=3 * estimate.stderr
        )


class CanonicalTransformCheck(AcceptanceCheck):
    name = "canonical-transform"
    description = "Phase-adjusted coherent states absorb point-gauge transforms"

    def run(self) -> list[CheckIssue]:
        space = FockSpace(60)
        H = HamiltonianSymbol.oscillator()
        pins = [(0.5, 0.2, -0.3, 0.4), (0.0, -0.6, 0.8, 0.1)]
        issues = []
        for kappa in (-1.0, 0.3, 0.7, 2.0):
            tr = CanonicalTransform(kappa)
            residual = canonical_phase_check(tr, H, 0.7, pins, space)
            if residual > 1e-10:
                issues.append(self.issue(f"kappa={kappa}: residual {residual:.3e}"))
            A, B, C = metric_pullback(tr, (0.3, -0.2))
            issues += self.expect_close(
                f"kappa={kappa}: AC - B^2", A * C - B * B, 1.0, abs_=1e-12
            )
        return issues


class ReproducibilityCheck(AcceptanceCheck):
    name = "reproducibility"
    description = "Same seed, same configuration: bitwise-identical result files"
    slow = True

    def run(self) -> list[CheckIssue]:
        config = validate_config(
            {
                "experiment": {"name": "repro", "scheme": "dk"},
                "physics": {**dict(zip(PIN_KEYS, DK_PINS, strict=True)), "T": 1.0},
                "numerics": {
                    "nu_list": [4.0, 8.0, 16.0],
                    "samples": 10_000,
                    "seed": CHECK_SEED,
                },
                "symbol": {"kind": "oscillator"},
            }
        )
        outputs = []
        with tempfile.TemporaryDirectory() as tmp:
            for attempt in ("a", "b"):
                record = run_experiment(config, threads=2)
                paths = write_report(record, Path(tmp) / attempt)
                outputs.append([path.read_bytes() for path in paths])
        if outputs[0] != outputs[1]:
            return [self.issue("result files differ between identical runs")]
        return []


DEFAULT_CHECKS: tuple[type[AcceptanceCheck], ...] = (
    FreeChainCheck,
    FeynmanKacCheck,
    FeynmanKacMonteCarloCheck,
    PositivityCheck,
    CameronCheck,
    ItoLimitCheck,
    RelativisticLatticeCheck,
    ResolutionOfUnityCheck,
    AntinormalSpectrumCheck,
    CoherentLatticeCheck,
    MeanValueCheck,
    DKExtrapolationCheck,
    DKMonteCarloCheck,
    CanonicalTransformCheck,
    ReproducibilityCheck,
)


@dataclass(slots=True)
class CheckReport:
    """Issues per check, including checks that raised."""

    ran: list[str] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)
    issues: list[CheckIssue] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        """True when no check reported an issue."""
        return not self.issues


def run_checks(
    checks: Sequence[AcceptanceCheck] | None = None, *, include_slow: bool = True
) -> CheckReport:
    """Run acceptance checks one after another."""
    checks = [cls() for cls in DEFAULT_CHECKS] if checks is None else list(checks)
    report = CheckReport()
    for check in checks:
        if check.slow and not include_slow:
            report.skipped.append(check.name)
            continue
        log.info("Running check %s", check.name)
        try:
            issues = check.run()
        except Exception as exc:
            log.exception("Check %s failed: %s", check.name, exc)
            issues = [check.issue(f"raised {type(exc).__name__}: {exc}")]
        for issue in issues:
            log.warning("%s: %s", issue.check, issue.message)
        report.ran.append(check.name)
        report.issues.extend(issues)
    return report
