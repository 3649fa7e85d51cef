import json
import logging

import pytest

from pathint.cli import main, resolve_log_level, resolve_threads
from pathint.core.errors import ConfigError

LATTICE_YAML = """\
experiment:
  name: cli_lattice
  scheme: lattice
physics:
  T: 1.0
  x1: 0.0
  x2: 0.5
numerics:
  n_list: [1, 2, 4]
acceptance:
  max_relative_error: {threshold}
potential:
  kind: {kind}
"""


def run_cli(*argv):
    with pytest.raises(SystemExit) as exc:
        main(list(argv))
    return exc.value.code


@pytest.fixture(autouse=True)
def isolated(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("PATHINT_THREADS", raising=False)
    monkeypatch.delenv("PATHINT_LOG_LEVEL", raising=False)


def write_config(tmp_path, threshold, kind="zero"):
    path = tmp_path / "cli_lattice.yaml"
    path.write_text(LATTICE_YAML.format(threshold=threshold, kind=kind))
    return path


def test_run_writes_results(tmp_path):
    config = write_config(tmp_path, 1e-9)
    out = str(tmp_path / "out")
    code = run_cli("run", "--config", str(config), "--out", out, "--compress")
    assert code == 0
    payload = json.loads((tmp_path / "out" / "cli_lattice.json").read_text())
    assert payload["acceptance"]["passed"] is True
    assert (tmp_path / "out" / "cli_lattice.json.zst").exists()


def test_invalid_config_exits_2(tmp_path, capsys):
    path = tmp_path / "broken.ini"
    path.write_text("[experiment]\nname = broken\nscheme = lattice\n")
    assert run_cli("run", "--config", str(path)) == 2
    assert "physics.T: required for scheme lattice" in capsys.readouterr().err


def test_missing_file_exits_2(tmp_path):
    assert run_cli("run", "--config", str(tmp_path / "absent.yaml")) == 2


def test_bad_log_level_exits_2(tmp_path):
    config = write_config(tmp_path, 1e-9)
    assert run_cli("--log-level", "LOUD", "run", "--config", str(config)) == 2


@pytest.mark.parametrize(
    ("name", "verbose", "quiet", "expected"),
    [
        (None, 0, 0, logging.INFO),
        ("warning", 0, 0, logging.WARNING),
        (None, 1, 0, logging.DEBUG),
        (None, 0, 2, logging.ERROR),
        ("ERROR", 5, 0, logging.DEBUG),
        (None, 0, 9, logging.CRITICAL),
    ],
)
def test_log_level_flags(name, verbose, quiet, expected):
    assert resolve_log_level(name, verbose, quiet) == expected


def test_log_level_from_environment(monkeypatch):
    monkeypatch.setenv("PATHINT_LOG_LEVEL", "error")
    assert resolve_log_level(None) == logging.ERROR
    assert resolve_log_level(None, verbose=1) == logging.WARNING
    assert resolve_log_level("DEBUG") == logging.DEBUG
    with pytest.raises(ValueError, match="LOUD"):
        resolve_log_level("LOUD")


def test_quiet_run_succeeds(tmp_path):
    config = write_config(tmp_path, 1e-9)
    out = str(tmp_path / "out")
    assert run_cli("-qq", "run", "--config", str(config), "--out", out) == 0


def test_schemes_lists_columns(capsys):
    assert run_cli("schemes") == 0
    out = capsys.readouterr().out
    for scheme in ("lattice", "fk", "cameron", "ito", "ps-lattice", "cs", "dk"):
        assert f"{scheme}:" in out
    assert "columns:  scheme, method, nu, n," in out


def test_threads_from_environment(monkeypatch):
    assert resolve_threads(None) == 1
    monkeypatch.setenv("PATHINT_THREADS", "4")
    assert resolve_threads(None) == 4
    assert resolve_threads(2) == 2


@pytest.mark.parametrize("raw", ["zero", "0", "-3"])
def test_bad_thread_counts(monkeypatch, raw):
    monkeypatch.setenv("PATHINT_THREADS", raw)
    with pytest.raises(ConfigError, match="threads"):
        resolve_threads(None)


def test_bad_threads_exit_2(tmp_path, monkeypatch):
    config = write_config(tmp_path, 1e-9)
    monkeypatch.setenv("PATHINT_THREADS", "many")
    assert run_cli("run", "--config", str(config), "--out", str(tmp_path)) == 2


def test_failed_acceptance_exits_1(tmp_path):
    config = write_config(tmp_path, 1e-9, kind="harmonic")
    assert run_cli("run", "--config", str(config), "--out", str(tmp_path / "out")) == 1
    payload = json.loads((tmp_path / "out" / "cli_lattice.json").read_text())
    assert payload["acceptance"]["passed"] is False
