"""Experiment configuration files and their validated model."""

import configparser
import re
from logging import getLogger
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError
from ruamel.yaml import YAML

from pathint.core.errors import ConfigError
from pathint.core.grids import PotentialSpec, SpatialGrid
from pathint.oracles.symbols import HamiltonianSymbol, Ordering

log = getLogger(__name__)

type Scheme = Literal["lattice", "fk", "cameron", "ito", "ps-lattice", "cs", "dk"]

SCHEMES: tuple[str, ...] = ("lattice", "fk", "cameron", "ito", "ps-lattice", "cs", "dk")
STOCHASTIC_SCHEMES = frozenset({"fk", "dk"})

REQUIRED_FIELDS: dict[str, tuple[str, ...]] = {
    "lattice": ("physics.T", "physics.x1", "physics.x2", "numerics.n_list"),
    "fk": ("physics.T", "physics.nu", "physics.x1", "physics.x2", "numerics.n_list"),
    "cameron": ("physics.lam", "physics.eps", "numerics.n_list"),
    "ito": ("physics.T", "numerics.nu_list"),
    "ps-lattice": ("physics.T", "physics.x1", "physics.x2", "numerics.n_list"),
    "cs": (
        "physics.T",
        "physics.p1",
        "physics.q1",
        "physics.p2",
        "physics.q2",
        "numerics.n_list",
    ),
    "dk": (
        "physics.T",
        "physics.p1",
        "physics.q1",
        "physics.p2",
        "physics.q2",
        "numerics.nu_list",
    ),
}

_NUMBER = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_COMPLEX = re.compile(rf"^\s*({_NUMBER})\s*,\s*({_NUMBER})\s*$")
_MONOMIAL = re.compile(r"^(?:(p)(?:\^(\d+))?)?\*?(?:(q)(?:\^(\d+))?)?$")


def parse_value(text: str) -> Any:
    """Parse one configuration value.

    Numbers may be decimal or scientific, complex values are written `re,im`
    and lists are bracketed. Anything else stays a string.
    """
    value = text.strip()
    if value.startswith("[") and value.endswith("]"):
        inner = value[1:-1].strip()
        return [parse_value(item) for item in inner.split(",")] if inner else []
    if match := _COMPLEX.match(value):
        return complex(float(match[1]), float(match[2]))
    if value.lower() in {"true", "false"}:
        return value.lower() == "true"
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        return value


def _normalize(value: Any) -> Any:
    if isinstance(value, str):
        return parse_value(value)
    if isinstance(value, list):
        return [_normalize(item) for item in value]
    return value


def load_config_file(path: Path | str) -> dict[str, dict[str, Any]]:
    """Read a sectioned text or YAML experiment file into nested mappings.

    Raises:
        ConfigError: If the file is missing or cannot be parsed.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")
    try:
        if path.suffix in {".yaml", ".yml"}:
            with path.open() as f:
                raw = YAML(typ="safe").load(f) or {}
            if not isinstance(raw, dict):
                raise ConfigError(f"{path}: top level must be a mapping of sections")
            return {
                str(section): {str(k): _normalize(v) for k, v in (body or {}).items()}
                for section, body in raw.items()
            }
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str  # keys such as p^2 are case-sensitive
        parser.read(path)
        return {
            section: {key: parse_value(value) for key, value in parser[section].items()}
            for section in parser.sections()
        }
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"Failed to load config file '{path}': {exc}") from exc


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ExperimentSection(_Section):
    """Identity and output location."""

    name: str
    scheme: Scheme
    output: str = "results"


class PhysicsSection(_Section):
    """Physical parameters; which ones are needed depends on the scheme."""

    m: float = Field(default=1.0, gt=0)
    hbar: float = Field(default=1.0, gt=0)
    nu: float | None = Field(default=None, gt=0)
    T: float | None = Field(default=None, gt=0)
    x1: float | None = None
    x2: float | None = None
    p1: float | None = None
    q1: float | None = None
    p2: float | None = None
    q2: float | None = None
    lam: complex | None = None
    eps: float | None = Field(default=None, gt=0)
    omega: float = Field(default=1.0, gt=0)


class NumericsSection(_Section):
    """Resolutions, grids and sampling."""

    n_list: list[int] | None = None
    nu_list: list[float] | None = None
    n_steps: int | None = Field(default=None, gt=1)
    samples: int | None = Field(default=None, gt=0)
    seed: int | None = Field(default=None, ge=0, lt=1 << 64)
    grid_min: float = -6.0
    grid_max: float = 6.0
    grid_points: int = Field(default=601, ge=3)
    damping: float = Field(default=0.0, ge=0)
    model: Literal["inverse", "sqrt"] = "inverse"
    fock_dim: int = Field(default=80, ge=8)


class PotentialSection(_Section):
    """`V(x)` by kind and increasing-power coefficients."""

    kind: Literal["zero", "constant", "linear", "quadratic", "harmonic"] = "zero"
    coefficients: list[float] = Field(default_factory=list)


class AcceptanceSection(_Section):
    """Pass/fail thresholds applied to the finished rows."""

    max_relative_error: float | None = Field(default=None, gt=0)
    expected_order: float | None = None
    order_tolerance: float = Field(default=0.25, gt=0)
    max_slope: float | None = None


class ExperimentConfig(BaseModel):
    """A validated experiment file."""

    model_config = ConfigDict(frozen=True)

    experiment: ExperimentSection
    physics: PhysicsSection = Field(default_factory=PhysicsSection)
    numerics: NumericsSection = Field(default_factory=NumericsSection)
    potential: PotentialSection = Field(default_factory=PotentialSection)
    symbol: dict[str, Any] = Field(default_factory=dict)
    acceptance: AcceptanceSection = Field(default_factory=AcceptanceSection)

    @property
    def scheme(self) -> str:
        """Scheme identifier."""
        return self.experiment.scheme

    @property
    def name(self) -> str:
        """Experiment name used for output files."""
        return self.experiment.name

    @property
    def is_stochastic(self) -> bool:
        """True when the configured rows draw random samples."""
        return self.scheme in STOCHASTIC_SCHEMES and self.numerics.samples is not None

    def lookup(self, dotted: str) -> Any:
        """Return the value at `section.field`."""
        section, field = dotted.split(".")
        return getattr(getattr(self, section), field)

    def missing_fields(self) -> list[str]:
        """Required fields of the scheme that are unset."""
        missing = [f for f in REQUIRED_FIELDS[self.scheme] if self.lookup(f) is None]
        if self.is_stochastic and self.numerics.seed is None:
            missing.append("numerics.seed")
        return missing

    def with_seed(self, seed: int) -> ExperimentConfig:
        """Copy with `numerics.seed` replaced."""
        numerics = self.numerics.model_copy(update={"seed": seed})
        return self.model_copy(update={"numerics": numerics})

    def pins(self) -> tuple[float, float, float, float]:
        """Phase-space pins `(p2, q2, p1, q1)`."""
        phys = self.physics
        return (phys.p2, phys.q2, phys.p1, phys.q1)

    def grid(self) -> SpatialGrid:
        """Spatial grid of the numerics section."""
        num = self.numerics
        return SpatialGrid(num.grid_min, num.grid_max, num.grid_points)

    def potential_spec(self) -> PotentialSpec:
        """Build the configured potential."""
        pot = self.potential
        c = list(pot.coefficients)
        match pot.kind:
            case "zero":
                return PotentialSpec.zero()
            case "constant":
                return PotentialSpec.constant(*(c or [0.0]))
            case "linear":
                return PotentialSpec.linear(*c)
            case "quadratic":
                return PotentialSpec.quadratic(*c)
            case "harmonic":
                return PotentialSpec.harmonic(self.physics.omega, self.physics.m)

    def hamiltonian(self) -> HamiltonianSymbol:
        """Build the configured symbol.

        Raises:
            ConfigError: For unknown kinds or malformed monomial keys.
        """
        return parse_symbol(self.symbol, mass=self.physics.m, omega=self.physics.omega)


def parse_symbol(
    section: dict[str, Any], *, mass: float = 1.0, omega: float = 1.0
) -> HamiltonianSymbol:
    """Build a symbol from `kind = ...` or monomial keys such as `p^2 = 0.5`.

    Raises:
        ConfigError: For unknown kinds or malformed monomial keys.
    """
    body = dict(section)
    try:
        ordering = Ordering(body.pop("ordering", Ordering.ANTINORMAL))
    except ValueError as exc:
        raise ConfigError(f"symbol.ordering: {exc}") from exc
    kind = body.pop("kind", None)
    match kind:
        case None | "polynomial":
            pass
        case "free":
            return HamiltonianSymbol.free(mass, ordering=ordering)
        case "oscillator":
            return HamiltonianSymbol.oscillator(omega, mass, ordering=ordering)
        case "relativistic":
            return HamiltonianSymbol.relativistic(mass)
        case _:
            raise ConfigError(f"symbol.kind: unknown symbol kind {kind!r}")
    terms: dict[tuple[int, int], float] = {}
    for key, value in body.items():
        name = str(key).replace(" ", "")
        if name == "1":
            powers = (0, 0)
        elif (match := _MONOMIAL.match(name)) and (match[1] or match[3]):
            powers = (
                int(match[2] or 1) if match[1] else 0,
                int(match[4] or 1) if match[3] else 0,
            )
        else:
            raise ConfigError(f"symbol.{key}: not a monomial in p and q")
        terms[powers] = terms.get(powers, 0.0) + float(value)
    return HamiltonianSymbol.from_terms(terms, ordering=ordering)


def _format_errors(exc: ValidationError) -> str:
    lines = []
    for error in exc.errors():
        location = ".".join(str(part) for part in error["loc"])
        lines.append(f"{location}: {error['msg']}")
    return "\n".join(lines)


def validate_config(sections: dict[str, dict[str, Any]]) -> ExperimentConfig:
    """Validate parsed sections against the model and the scheme requirements.

    Raises:
        ConfigError: With one `section.field: message` line per problem.
    """
    try:
        config = ExperimentConfig.model_validate(sections)
    except ValidationError as exc:
        raise ConfigError(_format_errors(exc)) from exc
    if missing := config.missing_fields():
        raise ConfigError(
            "\n".join(
                f"{field}: required for scheme {config.scheme}" for field in missing
            )
        )
    config.hamiltonian()
    try:
        config.potential_spec()
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"potential: {exc}") from exc
    log.debug("Validated config %s for scheme %s", config.name, config.scheme)
    return config


def load_config(path: Path | str, *, seed: int | None = None) -> ExperimentConfig:
    """Load and validate an experiment file; `seed` overrides `numerics.seed`.

    Raises:
        ConfigError: For unreadable files or invalid contents.
    """
    sections = load_config_file(path)
    if seed is not None:
        sections.setdefault("numerics", {})["seed"] = seed
    return validate_config(sections)
