"""One printed pass/fail line per acceptance criterion (run with -s to see them)."""
import pytest

from cyclicity.acceptance import CRITERIA


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    result = CRITERIA[number]()
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.detail
