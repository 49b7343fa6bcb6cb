"""The acceptance gate: one test per criterion, each printing a pass/fail
line with the measured numbers."""

import pytest

from sizepop import acceptance


@pytest.mark.parametrize("criterion", acceptance.ALL_CRITERIA,
                         ids=[c.__name__ for c in acceptance.ALL_CRITERIA])
def test_criterion(criterion):
    result = criterion()
    status = "PASS" if result.passed else "FAIL"
    print(f"\nACCEPTANCE {status}  {result.name}  "
          f"[{result.runtime_s:.1f}s / budget {result.budget_s:.0f}s]  "
          f"{result.details}")
    assert result.passed, result.details
