"""Acceptance experiments at full size; one pass/fail line per criterion.

The lines are printed in the terminal summary. Criteria 3 and 4 audit the
batches of criterion 1 and criterion 7 audits those of criterion 6; the
shared batches are cached, so run the whole module for realistic timing.
"""

import pytest

from beepmis.presets import CRITERIA

pytestmark = pytest.mark.slow


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, record_criterion):
    res = record_criterion(CRITERIA[number]())
    assert res.passed, res.line()
