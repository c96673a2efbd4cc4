"""Acceptance gate: one test per criterion at the contract tolerances."""

from __future__ import annotations

import pytest

from hbundle import acceptance

from conftest import ACCEPTANCE_LINES


@pytest.mark.parametrize("name", list(acceptance.CRITERIA))
def test_criterion(name):
    rep = acceptance.CRITERIA[name]()
    line = acceptance.summary_line(name, rep)
    ACCEPTANCE_LINES[name] = line
    print(line)
    assert rep.passed, line
