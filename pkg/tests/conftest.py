import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from randao.epoch import ModelParams  # noqa: E402
from randao.mdp import policy_iteration  # noqa: E402


@pytest.fixture(scope="session")
def solved():
    """Memoised policy iteration keyed by (alpha, ell)."""
    cache = {}

    def get(alpha, ell=32):
        key = (alpha, ell)
        if key not in cache:
            cache[key] = policy_iteration(ModelParams(alpha, ell))
        return cache[key]

    return get


# ------------------------------------------------------------ criterion report

_criteria = {}


def pytest_runtest_logreport(report):
    crit = dict(report.user_properties).get("criterion")
    if crit is None:
        return
    n, title = crit
    entry = _criteria.setdefault(n, {"title": title, "ok": True, "detail": ""})
    if report.failed:
        entry["ok"] = False
    if report.when == "call":
        entry["detail"] = dict(report.user_properties).get("detail", "")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        e = _criteria[n]
        status = "PASS" if e["ok"] else "FAIL"
        terminalreporter.write_line(f"criterion {n:2d} {status}  {e['title']}  {e['detail']}".rstrip())
