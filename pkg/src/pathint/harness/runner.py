"""Run one experiment: evaluate rows concurrently, fit, apply acceptance."""

import asyncio
import threading
import time
import warnings
from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import dataclass, field
from logging import getLogger
from typing import Any

from pathint.core.errors import (
    ExtrapolationError,
    PathIntegralError,
    PathIntegralWarning,
)
from pathint.harness.config import ExperimentConfig
from pathint.harness.convergence import ConvergenceFit, convergence_table
from pathint.harness.experiments import Experiment, RowSpec, experiment_for

log = getLogger(__name__)


@dataclass(slots=True)
class AcceptanceResult:
    """Outcome of the configured thresholds."""

    passed: bool | None
    failures: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        """JSON-ready summary."""
        return {"passed": self.passed, "failures": list(self.failures)}


@dataclass(slots=True)
class ReportRecord:
    """Everything one run produced: echoed config, rows, fit and verdict."""

    config: ExperimentConfig
    columns: tuple[str, ...]
    rows: list[dict[str, Any]]
    convergence: ConvergenceFit | None
    acceptance: AcceptanceResult
    runtime: float = 0.0

    @property
    def passed(self) -> bool | None:
        """Acceptance verdict; `None` when no thresholds are configured."""
        return self.acceptance.passed


class _WarningRouter:
    """Collect warnings raised in worker threads into the row being evaluated."""

    def __init__(self) -> None:
        """Start with no active row on any thread."""
        self._local = threading.local()
        self._fallback = warnings.showwarning

    def _show(self, message, category, filename, lineno, file=None, line=None) -> None:
        bucket = getattr(self._local, "bucket", None)
        if bucket is None:
            self._fallback(message, category, filename, lineno, file, line)
            return
        bucket.append(f"{category.__name__}: {message}")

    @contextmanager
    def installed(self) -> Iterator[None]:
        """Route warnings for the duration of a run."""
        with warnings.catch_warnings():
            warnings.simplefilter("always", PathIntegralWarning)
            warnings.showwarning = self._show
            yield

    @contextmanager
    def collecting(self, bucket: list[str]) -> Iterator[None]:
        """Send this thread's warnings to `bucket`."""
        self._local.bucket = bucket
        try:
            yield
        finally:
            self._local.bucket = None


def evaluate_row(
    experiment: Experiment, spec: RowSpec, router: _WarningRouter | None = None
) -> dict[str, Any]:
    """Evaluate one row into its output columns.

    Library and domain errors become `status = error`; warnings become
    `status = warning` with their text in `message`. Anything else propagates.
    """
    row: dict[str, Any] = {column: None for column in experiment.columns()}
    row.update({"scheme": experiment.scheme, **spec.params})
    caught: list[str] = []
    try:
        if router is None:
            outcome = experiment.evaluate(spec)
        else:
            with router.collecting(caught):
                outcome = experiment.evaluate(spec)
    except (PathIntegralError, ValueError, ArithmeticError) as exc:
        log.warning("Row %s of %s failed: %s", spec.key, experiment.scheme, exc)
        row.update(status="error", message=f"{type(exc).__name__}: {exc}")
        return row
    row.update({k: v for k, v in outcome.columns().items() if k in row})
    row["status"] = "warning" if caught else "ok"
    row["message"] = "; ".join(caught) if caught else None
    return row


async def _evaluate_rows(
    experiment: Experiment, specs: list[RowSpec], threads: int
) -> list[dict[str, Any]]:
    semaphore = asyncio.Semaphore(threads)
    router = _WarningRouter()

    async def run_one(spec: RowSpec) -> dict[str, Any]:
        async with semaphore:
            return await asyncio.to_thread(evaluate_row, experiment, spec, router)

    with router.installed():
        async with asyncio.TaskGroup() as tg:
            tasks = [tg.create_task(run_one(spec)) for spec in specs]
    return [task.result() for task in tasks]


def fit_convergence(
    experiment: Experiment, rows: list[dict[str, Any]]
) -> ConvergenceFit | None:
    """Convergence fit of the scheme's primary rows, if enough of them exist."""
    try:
        return convergence_table(
            experiment.convergence_rows(rows), experiment.convergence_variable
        )
    except ExtrapolationError as exc:
        log.info("No convergence fit for %s: %s", experiment.scheme, exc)
        return None


def _final_row(rows: list[dict[str, Any]]) -> dict[str, Any] | None:
    for method in ("extrapolated", "chain", "transfer"):
        matching = [r for r in rows if r.get("method") == method]
        if matching:
            return matching[-1]
    return rows[-1] if rows else None


def apply_acceptance(
    config: ExperimentConfig, rows: list[dict[str, Any]], fit: ConvergenceFit | None
) -> AcceptanceResult:
    """Check the acceptance section against the finished rows.

    The error threshold applies to the finest-resolution row (or the
    extrapolant when present); order and slope thresholds to the fit.
    """
    acc = config.acceptance
    thresholds = (acc.max_relative_error, acc.expected_order, acc.max_slope)
    if all(value is None for value in thresholds):
        return AcceptanceResult(None)
    failures = [
        f"row {r['scheme']} failed: {r['message']}"
        for r in rows
        if r["status"] == "error"
    ]
    if acc.max_relative_error is not None:
        final = _final_row(rows)
        error = None if final is None else final.get("relative_error")
        if error is None:
            failures.append("max_relative_error: no oracle error to compare")
        elif error > acc.max_relative_error:
            failures.append(
                f"max_relative_error: {error:.3g} > {acc.max_relative_error:.3g}"
            )
    if acc.expected_order is not None or acc.max_slope is not None:
        if fit is None:
            failures.append("convergence: no fit available")
        elif not fit.exact:
            if acc.expected_order is not None:
                tolerance = acc.order_tolerance * abs(acc.expected_order)
                if abs(fit.order - acc.expected_order) > tolerance:
                    failures.append(
                        f"expected_order: fitted {fit.order:.3f}, "
                        f"expected {acc.expected_order} +- {tolerance:.3g}"
                    )
            if acc.max_slope is not None and fit.slope > acc.max_slope:
                failures.append(f"max_slope: fitted {fit.slope:.3f} > {acc.max_slope}")
    return AcceptanceResult(not failures, failures)


def _sort_key(row: dict[str, Any], parameters: tuple[str, ...]) -> tuple[Any, ...]:
    key = []
    for name in parameters:
        value = row.get(name)
        key.append((value is None, "" if value is None else value))
    return tuple(key)


async def run_experiment_async(
    config: ExperimentConfig, *, threads: int = 1
) -> ReportRecord:
    """Evaluate every row of the configured scheme and summarize."""
    experiment = experiment_for(config)
    specs = experiment.rows()
    log.info(
        "Running %s (%s): %d rows on %d threads",
        config.name,
        config.scheme,
        len(specs),
        threads,
    )
    start = time.perf_counter()
    rows = await _evaluate_rows(experiment, specs, max(1, threads))
    rows.sort(key=lambda row: _sort_key(row, experiment.parameters))
    fit = fit_convergence(experiment, rows)
    acceptance = apply_acceptance(config, rows, fit)
    runtime = time.perf_counter() - start
    log.info(
        "Finished %s in %.2fs (%d errors)",
        config.name,
        runtime,
        sum(row["status"] == "error" for row in rows),
    )
    return ReportRecord(config, experiment.columns(), rows, fit, acceptance, runtime)


def run_experiment(config: ExperimentConfig, *, threads: int = 1) -> ReportRecord:
    """Synchronous wrapper around `run_experiment_async`."""
    return asyncio.run(run_experiment_async(config, threads=threads))
