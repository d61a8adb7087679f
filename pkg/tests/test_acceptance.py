"""Acceptance gate: every criterion at its stated tolerance and time limit.

One PASS/FAIL line per criterion is printed in the terminal summary.
"""

import pytest

from periodfn.acceptance import CRITERIA

RESULTS = []


@pytest.mark.parametrize("criterion", CRITERIA, ids=lambda f: f.__name__)
def test_criterion(criterion, capsys):
    res = criterion()
    RESULTS.append(res)
    with capsys.disabled():
        print("\n" + res.line())
    assert res.passed, f"{res.line()}\n{res.details}"
