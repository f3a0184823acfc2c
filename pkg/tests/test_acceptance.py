"""Reproduction checks, one test per numbered criterion.

Each test prints a single PASS/FAIL line (collected again in the terminal
summary). Tolerances and instance counts live in ``bmcgames.acceptance``.
"""
import pytest

from bmcgames.acceptance import CRITERIA, DEFAULT_SEED, run_criterion

RESULTS = []


@pytest.mark.acceptance
@pytest.mark.parametrize("number", sorted(CRITERIA), ids=lambda n: f"criterion{n:02d}")
def test_criterion(number):
    result = run_criterion(number, seed=DEFAULT_SEED)
    RESULTS.append(result.line())
    print(result.line())
    assert result.passed, result.line()
