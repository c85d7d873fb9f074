"""The twelve acceptance criteria at their stated tolerances and budgets."""

import pytest

from kerrlab.checks import CHECKS

LINES = {}


@pytest.mark.slow
@pytest.mark.parametrize("number", sorted(CHECKS))
def test_criterion(number):
    result = CHECKS[number]()
    LINES[number] = result.line()
    print(result.line())
    assert result.passed, result.line() + f" {result.metrics}"
