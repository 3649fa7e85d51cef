"""Result files: one CSV and one JSON document per experiment."""

import csv
import io
import json
import os
import tempfile
from logging import getLogger
from pathlib import Path
from typing import Any

from zstandard import ZstdCompressor

from pathint.harness.runner import ReportRecord

log = getLogger(__name__)


def _atomic_write(path: Path, data: bytes) -> None:
    """Write `data` to a sibling temporary file and rename it over `path`."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _cell(value: Any) -> Any:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return value


def render_csv(columns: tuple[str, ...], rows: list[dict[str, Any]]) -> str:
    """Render rows with a header; floats round-trip, missing values are empty."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(column)) for column in columns])
    return buffer.getvalue()


def build_report_payload(
    record: ReportRecord, *, timing: bool = False
) -> dict[str, Any]:
    """JSON document with the echoed config, rows, convergence and verdict.

    Wall-clock time is only included when `timing` is set, so that repeated
    runs with the same seed produce identical files.
    """
    config = record.config
    fit = record.convergence
    payload: dict[str, Any] = {
        "$schema": "results.schema.json",
        "name": config.name,
        "scheme": config.scheme,
        "config": config.model_dump(mode="json"),
        "columns": list(record.columns),
        "rows": [
            {column: row.get(column) for column in record.columns}
            for row in record.rows
        ],
        "convergence": None if fit is None else fit.to_dict(),
        "acceptance": record.acceptance.to_dict(),
    }
    if timing:
        payload["runtime_seconds"] = record.runtime
    return payload


def render_json(payload: dict[str, Any], *, pretty: bool = True) -> str:
    """Serialize a payload; non-finite floats are rejected."""
    if pretty:
        return json.dumps(payload, ensure_ascii=False, indent=2, allow_nan=False) + "\n"
    return json.dumps(
        payload, ensure_ascii=False, separators=(",", ":"), allow_nan=False
    )


def write_payload(path: Path, payload: dict[str, Any], *, pretty: bool = True) -> None:
    """Persist a JSON payload to `path` atomically.

    Args:
        path (Path): Destination path for the JSON payload.
        payload (dict[str, Any]): Serialized payload.
        pretty (bool): Whether to pretty-print JSON with indentation.
    """
    _atomic_write(path, render_json(payload, pretty=pretty).encode("utf-8"))


def write_zstd(path: Path, payload: dict[str, Any]) -> None:
    """Write a zstd-compressed minified JSON payload to `path`."""
    data = render_json(payload, pretty=False).encode("utf-8")
    _atomic_write(path, ZstdCompressor().compress(data))


def write_report(
    record: ReportRecord,
    out_dir: Path | str,
    *,
    timing: bool = False,
    compress: bool = False,
) -> list[Path]:
    """Write `<name>.csv` and `<name>.json` (and `<name>.json.zst`) under `out_dir`.

    Returns:
        list[Path]: Paths written, in order.
    """
    out_dir = Path(out_dir)
    name = record.config.name
    columns = record.columns
    if timing:
        columns = (*columns, "runtime")
    rows = record.rows
    if timing:
        rows = [{**row, "runtime": record.runtime} for row in rows]
    csv_path = out_dir / f"{name}.csv"
    json_path = out_dir / f"{name}.json"
    _atomic_write(csv_path, render_csv(columns, rows).encode("utf-8"))
    payload = build_report_payload(record, timing=timing)
    write_payload(json_path, payload)
    written = [csv_path, json_path]
    if compress:
        zstd_path = json_path.with_name(f"{json_path.name}.zst")
        write_zstd(zstd_path, payload)
        written.append(zstd_path)
    for path in written:
        log.info("Wrote %s", path)
    return written
