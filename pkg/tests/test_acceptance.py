"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The checks live in :mod:`boseldp.verify` so that ``boseldp verify`` runs
exactly the same code.  Measured values are printed next to each line.
"""

import pytest

from boseldp import verify
from boseldp.extended import dumps


@pytest.mark.parametrize("group", list(verify.CHECKS))
def test_criterion(group, capsys):
    result = verify.CHECKS[group]()
    with capsys.disabled():
        print(f"\n{result.line()}  [{result.anchor}]")
        print(f"    measured: {dumps(result.measured, indent=None)}")
    assert result.passed, f"{result.name}: {dumps(result.measured, indent=None)}"
