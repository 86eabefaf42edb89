"""One test per acceptance criterion; each prints a PASS/FAIL line."""

import pytest

from spinqed import checks


def _report(result, capsys):
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.detail


@pytest.mark.parametrize("criterion", checks.CRITERIA, ids=lambda f: f.__name__)
def test_criterion(criterion, capsys):
    _report(criterion(), capsys)


def test_criterion_9_selftest(capsys):
    results = checks.run_all(report=None)
    with capsys.disabled():
        for r in results[:-1]:
            print("\n  " + r.line(), end="")
    _report(results[-1], capsys)
