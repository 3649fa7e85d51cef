import pytest

from pathint.harness.checks import (
    DEFAULT_CHECKS,
    AcceptanceCheck,
    CameronCheck,
    CanonicalTransformCheck,
    FreeChainCheck,
    MeanValueCheck,
    ResolutionOfUnityCheck,
    run_checks,
)


class ExplodingCheck(AcceptanceCheck):
    name = "exploding"

    def run(self):
        raise ArithmeticError("overflow")


class SlowCheck(AcceptanceCheck):
    name = "slow"
    slow = True

    def run(self):
        return [self.issue("should not run")]


@pytest.mark.parametrize(
    "check",
    [
        FreeChainCheck,
        CameronCheck,
        ResolutionOfUnityCheck,
        MeanValueCheck,
        CanonicalTransformCheck,
    ],
)
def test_quick_checks_pass(check):
    assert check().run() == []


def test_raising_check_is_reported():
    report = run_checks([ExplodingCheck()])
    assert not report.passed
    assert report.issues[0].message == "raised ArithmeticError: overflow"


def test_slow_checks_skipped_on_request():
    report = run_checks([SlowCheck(), FreeChainCheck()], include_slow=False)
    assert report.skipped == ["slow"]
    assert report.ran == ["free-chain"]
    assert report.passed


def test_expect_close():
    check = FreeChainCheck()
    assert check.expect_close("x", 1.0 + 1e-9, 1.0, rel=1e-8) == []
    (issue,) = check.expect_close("x", 1.1, 1.0, abs_=1e-3)
    assert issue.check == "free-chain"
    assert issue.message.startswith("x: gap")


def test_check_names_are_unique():
    names = [cls.name for cls in DEFAULT_CHECKS]
    assert len(names) == len(set(names))


@pytest.mark.slow
def test_all_checks_pass():
    report = run_checks()
    assert report.passed, [issue.message for issue in report.issues]
