"""Acceptance battery: one test per criterion, one pass/fail line each.

Run with -s to see the lines as they complete:

    pytest tests/test_acceptance.py -s
"""

import pytest

from plcalc import acceptance


@pytest.mark.parametrize(
    "criterion", acceptance.ALL_CRITERIA,
    ids=[fn.__name__.removeprefix("criterion_") for fn in acceptance.ALL_CRITERIA])
def test_criterion(criterion, capsys):
    result = criterion()
    with capsys.disabled():
        print()
        print(result.line())
    assert result.passed, result.detail
