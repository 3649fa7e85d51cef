from pathlib import Path

import pytest

from pathint.core.errors import ConfigError
from pathint.core.grids import PotentialKind
from pathint.harness.config import (
    load_config,
    load_config_file,
    parse_symbol,
    parse_value,
    validate_config,
)
from pathint.oracles.symbols import Ordering

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

FREE_INI = """\
[experiment]
name = free
scheme = lattice

[physics]
T = 1.0
x1 = -0.2
x2 = 0.7

[numerics]
n_list = [1, 2, 4]
"""


def write(tmp_path: Path, name: str, text: str) -> Path:
    path = tmp_path / name
    path.write_text(text)
    return path


@pytest.mark.parametrize(
    ("text", "expected"),
    [
        ("3", 3),
        ("1e-3", 1e-3),
        ("-2.5", -2.5),
        ("1,1", 1 + 1j),
        ("0.5, -2e-1", 0.5 - 0.2j),
        ("[1, 2, 4]", [1, 2, 4]),
        ("[]", []),
        ("true", True),
        ("stratonovich", "stratonovich"),
    ],
)
def test_parse_value(text, expected):
    assert parse_value(text) == expected


def test_ini_file_round_trips_into_the_model(tmp_path):
    config = load_config(write(tmp_path, "free.ini", FREE_INI))
    assert config.scheme == "lattice"
    assert config.physics.x2 == 0.7
    assert config.numerics.n_list == [1, 2, 4]
    assert config.potential_spec().kind is PotentialKind.ZERO
    assert config.experiment.output == "results"


def test_yaml_file_with_complex_value(tmp_path):
    text = (
        "experiment:\n  name: c\n  scheme: cameron\n"
        "physics:\n  lam: '1,1'\n  eps: 0.05\n"
        "numerics:\n  n_list: [1, 2]\n"
    )
    config = load_config(write(tmp_path, "c.yaml", text))
    assert config.physics.lam == 1 + 1j


@pytest.mark.parametrize("path", sorted(CONFIGS.iterdir()), ids=lambda p: p.name)
def test_shipped_configs_validate(path):
    config = load_config(path)
    assert config.name == path.stem


def test_missing_file():
    with pytest.raises(ConfigError, match="not found"):
        load_config_file("does/not/exist.ini")


def test_unknown_field_is_reported(tmp_path):
    text = FREE_INI + "\n[potential]\nkind = zero\nshape = round\n"
    path = write(tmp_path, "bad.ini", text)
    with pytest.raises(ConfigError, match="potential.shape"):
        load_config(path)


def test_missing_required_field_names_the_scheme(tmp_path):
    path = write(tmp_path, "bad.ini", FREE_INI.replace("x2 = 0.7\n", ""))
    with pytest.raises(ConfigError, match=r"physics.x2: required for scheme lattice"):
        load_config(path)


def test_stochastic_runs_need_a_seed():
    sections = {
        "experiment": {"name": "fk", "scheme": "fk"},
        "physics": {"T": 1.0, "nu": 1.0, "x1": 0.0, "x2": 0.0},
        "numerics": {"n_list": [16], "samples": 1000},
    }
    with pytest.raises(ConfigError, match="numerics.seed"):
        validate_config(sections)
    sections["numerics"]["seed"] = 3
    assert validate_config(sections).is_stochastic


def test_seed_override(tmp_path):
    config = load_config(CONFIGS / "dk_oscillator.yaml", seed=99)
    assert config.numerics.seed == 99
    assert config.with_seed(5).numerics.seed == 5


def test_invalid_values_are_reported():
    sections = {
        "experiment": {"name": "x", "scheme": "lattice"},
        "physics": {"T": -1.0, "x1": 0.0, "x2": 0.0},
        "numerics": {"n_list": [1]},
    }
    with pytest.raises(ConfigError, match="physics.T"):
        validate_config(sections)


def test_parse_symbol_from_monomials():
    H = parse_symbol({"p^2": 0.5, "q^2": 0.5, "q": 0.3, "1": -0.5})
    assert H.term(2, 0) == 0.5
    assert H.term(0, 1) == 0.3
    assert H.term(0, 0) == -0.5
    assert H.ordering is Ordering.ANTINORMAL


def test_parse_symbol_kinds():
    weyl = parse_symbol({"kind": "oscillator", "ordering": "weyl"})
    assert weyl.ordering is Ordering.WEYL
    assert parse_symbol({"kind": "relativistic"}).is_momentum_only
    assert parse_symbol({"p*q": 1.0}).term(1, 1) == 1.0


@pytest.mark.parametrize(
    "section", [{"kind": "anharmonic"}, {"x^2": 1.0}, {"ordering": "normal"}]
)
def test_parse_symbol_errors(section):
    with pytest.raises(ConfigError):
        parse_symbol(section)
