"""Acceptance battery: one test and one printed PASS/FAIL line per criterion.

Tolerances are pinned inside ``spinfact.verify`` and are not relaxed here.
A failing criterion fails its test; the README explains each known failure.
"""

import time

import pytest

from spinfact import verify


@pytest.fixture(scope="module")
def ctx():
    return verify.Context(seed=0)


@pytest.mark.parametrize("number,check", list(enumerate(verify.CRITERIA, 1)),
                         ids=[f"{k:02d}_{fn.__name__}" for k, fn in enumerate(verify.CRITERIA, 1)])
def test_criterion(number, check, ctx, capsys):
    t = time.perf_counter()
    res = check(ctx)
    res.elapsed = time.perf_counter() - t
    assert res.number == number
    with capsys.disabled():
        print("\n" + res.line())
    assert res.passed, res.detail
