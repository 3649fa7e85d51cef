import pytest

from pathint.core.errors import ExtrapolationError
from pathint.harness.convergence import convergence_table


def rows_with_errors(errors, variable="n"):
    return [
        {variable: x, "re": 1.0, "im": 0.0, "relative_error": e}
        for x, e in zip((16, 32, 64, 128), errors, strict=False)
    ]


def test_first_order_fit():
    fit = convergence_table(rows_with_errors([1e-2, 5e-3, 2.5e-3, 1.25e-3]))
    assert fit.source == "oracle"
    assert fit.order == pytest.approx(1.0)
    assert fit.band == pytest.approx(0.0, abs=1e-9)
    assert fit.to_dict()["points"] == 4


def test_rows_are_sorted_before_fitting():
    rows = rows_with_errors([1e-2, 2.5e-3, 6.25e-4])
    fit = convergence_table(list(reversed(rows)))
    assert fit.order == pytest.approx(2.0)


def test_errors_at_machine_precision_are_exact():
    fit = convergence_table(rows_with_errors([0.0, 1e-15, 3e-16]))
    assert fit.exact
    assert fit.order is None
    assert fit.to_dict()["order"] == "exact"


def test_too_few_points():
    with pytest.raises(ExtrapolationError):
        convergence_table(rows_with_errors([1e-2, 5e-3]))


def test_self_convergence_without_oracle():
    values = [1.0 + 2.0 ** -k for k in (4, 5, 6, 7, 8)]
    rows = [
        {"nu": 2.0**k, "re": v, "im": 0.0, "relative_error": None}
        for k, v in zip((4, 5, 6, 7, 8), values, strict=True)
    ]
    fit = convergence_table(rows, "nu")
    assert fit.source == "self"
    assert fit.points == 4
    assert fit.slope == pytest.approx(-1.0, abs=0.05)
