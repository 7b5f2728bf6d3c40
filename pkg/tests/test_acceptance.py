"""Acceptance battery: one test per criterion, each at its stated tolerance.

Each test prints its verdict line; the lines are repeated in the
``acceptance criteria`` section of the pytest summary.
"""

import pytest

from flmtails.verify import CHECKS, run_one


@pytest.mark.parametrize("name", list(CHECKS), ids=lambda n: f"{CHECKS[n][0]:02d}_{n}")
def test_criterion(name, acceptance_log):
    res = run_one(name)
    line = res.line()
    print(line)
    acceptance_log.append(line)
    assert res.passed, line
