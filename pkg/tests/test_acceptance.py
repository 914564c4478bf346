"""One line per acceptance criterion, run with the tolerances of the gate.

Run directly (``python tests/test_acceptance.py``) to print the table without pytest.
"""
import sys

import pytest

from p1tr.acceptance import CHECKS, run_checks

LINES: list[str] = []


@pytest.mark.parametrize("number", sorted(CHECKS), ids=lambda n: f"AC{n:02d}")
def test_criterion(number):
    result = CHECKS[number]()
    LINES.append(result.line())
    print(result.line())
    assert result.passed, result.line()


if __name__ == "__main__":
    results = run_checks()
    for r in results:
        print(r.line())
    sys.exit(0 if all(r.passed for r in results) else 1)
