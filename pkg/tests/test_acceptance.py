"""Acceptance battery: one test per criterion, each printing its pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
summary, or use the CLI equivalent `nc-hardy selftest`.
"""

import pytest

from nc_hardy import acceptance


@pytest.mark.parametrize("number", sorted(acceptance.CRITERIA))
def test_criterion(number):
    result = acceptance.CRITERIA[number](seed=None)
    line = (
        f"{'PASS' if result.passed else 'FAIL'}  criterion {result.number:>2}  "
        f"{result.name:<28} ({result.seconds:6.2f}s / budget {result.limit_seconds:.0f}s)  "
        f"{result.details}"
    )
    print(line)
    assert result.passed, line
    assert result.seconds <= result.limit_seconds, line
