import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "setup" and not rep.skipped and rep.passed:
        return
    if rep.when == "teardown" and rep.passed:
        return
    number, title = mark.args
    entry = _CRITERIA.setdefault(number, {"title": title, "status": [], "details": []})
    if hasattr(rep, "wasxfail"):
        entry["status"].append("FAIL")
    elif rep.skipped:
        entry["status"].append("SKIP")
    elif rep.failed:
        entry["status"].append("FAIL")
    elif rep.when == "call":
        entry["status"].append("PASS")
    for key, value in item.user_properties:
        if key == "detail" and rep.when == "call":
            entry["details"].append(str(value))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        st = entry["status"]
        if "FAIL" in st:
            verdict = "FAIL"
        elif st and all(s == "SKIP" for s in st):
            verdict = "SKIP"
        else:
            verdict = "PASS"
        detail = "; ".join(entry["details"])
        line = f"criterion {number:>2} {verdict}  {entry['title']}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
