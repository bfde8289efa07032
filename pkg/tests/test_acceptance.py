"""The thirteen acceptance criteria, each at its stated tolerance.

Each test prints its one-line verdict; the lines are also collected and shown
in the terminal summary so they are visible without ``-s``.
"""
import pytest

from ergolab.acceptance import CRITERIA

LINES = {}


@pytest.mark.slow
@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number):
    res = CRITERIA[number]()
    LINES[number] = res.line()
    print(res.line())
    assert res.passed, res.summary
