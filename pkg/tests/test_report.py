import csv
import io
import json

from zstandard import ZstdDecompressor

from pathint.harness.config import validate_config
from pathint.harness.report import build_report_payload, render_csv, write_report
from pathint.harness.runner import run_experiment


def fk_config():
    return validate_config(
        {
            "experiment": {"name": "fk_small", "scheme": "fk"},
            "physics": {"T": 1.0, "nu": 1.0, "x1": 0.0, "x2": 0.0},
            "potential": {"kind": "harmonic"},
            "numerics": {
                "n_list": [8, 16, 32],
                "n_steps": 16,
                "samples": 2000,
                "seed": 7,
                "grid_min": -8.0,
                "grid_max": 8.0,
                "grid_points": 161,
            },
        }
    )


def test_csv_cells():
    columns = ("scheme", "n", "re", "stderr")
    text = render_csv(columns, [{"scheme": "lattice", "n": 4, "re": 0.1}])
    assert text == "scheme,n,re,stderr\nlattice,4,0.1,\n"


def test_csv_floats_round_trip():
    value = 1 / 3
    text = render_csv(("re",), [{"re": value}])
    assert float(text.splitlines()[1]) == value


def test_report_files(tmp_path):
    record = run_experiment(fk_config())
    paths = write_report(record, tmp_path, compress=True)
    names = ["fk_small.csv", "fk_small.json", "fk_small.json.zst"]
    assert [p.name for p in paths] == names

    rows = list(csv.DictReader(io.StringIO(paths[0].read_text())))
    assert list(rows[0]) == list(record.columns)
    assert "runtime" not in rows[0]
    assert {row["method"] for row in rows} == {"transfer", "bridge"}
    assert all(row["seed"] == "7" for row in rows if row["method"] == "bridge")

    payload = json.loads(paths[1].read_text())
    assert payload["name"] == "fk_small"
    assert payload["config"]["numerics"]["seed"] == 7
    assert "runtime_seconds" not in payload
    assert len(payload["rows"]) == len(rows)

    compressed = ZstdDecompressor().decompress(paths[2].read_bytes())
    assert json.loads(compressed) == payload


def test_timing_adds_runtime(tmp_path):
    record = run_experiment(fk_config())
    csv_path, json_path = write_report(record, tmp_path, timing=True)
    assert csv_path.read_text().splitlines()[0].endswith(",runtime")
    assert json.loads(json_path.read_text())["runtime_seconds"] >= 0
    assert "runtime_seconds" not in build_report_payload(record)


def test_same_seed_same_bytes(tmp_path):
    config = fk_config()
    first = write_report(run_experiment(config, threads=1), tmp_path / "a")
    second = write_report(run_experiment(config, threads=3), tmp_path / "b")
    for a, b in zip(first, second, strict=True):
        assert a.read_bytes() == b.read_bytes()
