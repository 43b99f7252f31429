"""The ten acceptance criteria at their stated tolerances.

Criteria run once per session on the shipped default seeds; each test
prints its pass/fail line, and the lines are repeated in the terminal
summary.
"""

import pytest

from levysync import verification

from conftest import ACCEPTANCE_LINES


@pytest.fixture(scope="module")
def results():
    out = verification.run_all(report=lambda r: ACCEPTANCE_LINES.append(r.line()))
    return {r.number: r for r in out}


@pytest.mark.parametrize("number", range(1, 11))
def test_criterion(results, number):
    res = results[number]
    print(res.line())
    if not res.passed:
        pytest.fail(f"{res.line()}\ndetails: {repr(res.details)[:600]}", pytrace=False)
