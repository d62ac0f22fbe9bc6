"""Every acceptance criterion at its stated tolerance, one PASS/FAIL line each.

The lines are printed as the tests run and repeated in the terminal summary.
"""

import json

import pytest

from conftest import ACCEPTANCE_LINES
from resonia.acceptance import Context, run_criterion, summary_line, thread_budget
from resonia.config import RunConfig
from resonia.io import dumps


@pytest.fixture(scope="module")
def ctx():
    return Context(RunConfig(), workers=thread_budget(2))


def _show(e):
    line = summary_line(e)
    detail = json.dumps(json.loads(dumps({"m": e["measured"]}, ""))["m"], sort_keys=True)
    ACCEPTANCE_LINES.append(line)
    ACCEPTANCE_LINES.append(f"    measured: {detail}")
    print(line)


@pytest.mark.parametrize("k", range(1, 11))
def test_criterion(ctx, k):
    e = run_criterion(ctx, k)
    _show(e)
    assert "error" not in e, e.get("error")
    if not e["pass"] and not e["required"]:
        pytest.xfail("flagged stretch criterion; pre-asymptotic at the reference ladder")
    assert e["pass"], e["measured"]


def test_report_is_deterministic():
    a = run_criterion(Context(RunConfig(), workers=1), 7)
    b = run_criterion(Context(RunConfig(), workers=3), 7)
    assert dumps(a, "x") == dumps(b, "x")
