"""Log-log convergence fits over a column of result rows."""

from collections.abc import Sequence
from dataclasses import dataclass
from logging import getLogger
from typing import Any

import numpy as np
from scipy.stats import linregress
from scipy.stats import t as student_t

from pathint.core.errors import ExtrapolationError

log = getLogger(__name__)

MACHINE_PRECISION = 1e-12
MIN_POINTS = 3


@dataclass(frozen=True, slots=True)
class ConvergenceFit:
    """Power law `error ~ C * variable^slope` with a 95% band on the slope.

    `order` is `-slope`. When every error sits at machine precision the fit
    is skipped and `exact` is set.
    """

    variable: str
    source: str
    points: int
    slope: float | None
    intercept: float | None
    band: float | None
    exact: bool = False

    @property
    def order(self) -> float | None:
        """Convergence order, positive when the error shrinks."""
        return None if self.slope is None else -self.slope

    def to_dict(self) -> dict[str, Any]:
        """JSON-ready summary; exact fits report the string `exact`."""
        if self.exact:
            return {
                "variable": self.variable,
                "source": self.source,
                "points": self.points,
                "order": "exact",
            }
        return {
            "variable": self.variable,
            "source": self.source,
            "points": self.points,
            "slope": self.slope,
            "intercept": self.intercept,
            "order": self.order,
            "band": self.band,
        }


def _errors(
    rows: Sequence[dict[str, Any]], variable: str
) -> tuple[list[float], list[float], str]:
    """Pick oracle errors when available, otherwise successive differences."""
    with_oracle = [r for r in rows if r.get("relative_error") is not None]
    if len(with_oracle) == len(rows):
        return (
            [float(r[variable]) for r in rows],
            [float(r["relative_error"]) for r in rows],
            "oracle",
        )
    values = [complex(r["re"], r["im"]) for r in rows]
    xs = [float(r[variable]) for r in rows[:-1]]
    diffs = [
        abs(b - a) / max(abs(b), MACHINE_PRECISION)
        for a, b in zip(values, values[1:], strict=False)
    ]
    return xs, diffs, "self"


def convergence_table(
    rows: Sequence[dict[str, Any]], variable: str = "n"
) -> ConvergenceFit:
    """Fit `log error` against `log variable` by least squares.

    Rows need `variable`, `re` and `im`; when every row also carries a
    `relative_error` those are fitted, otherwise relative differences of
    successive values are.

    Raises:
        ExtrapolationError: For fewer than three usable points.
    """
    ordered = sorted(rows, key=lambda r: float(r[variable]))
    xs, errors, source = _errors(ordered, variable)
    if len(errors) < MIN_POINTS:
        raise ExtrapolationError(
            f"Convergence fit needs at least {MIN_POINTS} points, got {len(errors)}"
        )
    if all(e <= MACHINE_PRECISION for e in errors):
        return ConvergenceFit(
            variable, source, len(errors), None, None, None, exact=True
        )
    pairs = [
        (x, e)
        for x, e in zip(xs, errors, strict=True)
        if e > MACHINE_PRECISION and x > 0
    ]
    if len(pairs) < MIN_POINTS:
        raise ExtrapolationError(
            f"Only {len(pairs)} errors above machine precision; cannot fit a power law"
        )
    log_x = np.log([p[0] for p in pairs])
    log_e = np.log([p[1] for p in pairs])
    fit = linregress(log_x, log_e)
    band = float(student_t.ppf(0.975, len(pairs) - 2) * fit.stderr)
    log.debug(
        "Convergence in %s: slope %.3f +- %.3f (%s)", variable, fit.slope, band, source
    )
    return ConvergenceFit(
        variable, source, len(pairs), float(fit.slope), float(fit.intercept), band
    )
