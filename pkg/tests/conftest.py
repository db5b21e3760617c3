"""Prints one pass/fail line per acceptance criterion after the run.

Acceptance tests are named ``test_criterion_<n>_...``; a criterion passes
only if every test carrying its number passed. Tests may attach measured
values with ``record_property("measured", text)``.
"""
import re

_CRITERION = re.compile(r"test_criterion_(\d+)_")
_results = {}


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m:
        return
    if report.when != "call" and report.passed:
        return
    entry = _results.setdefault(int(m.group(1)), {"ok": True, "measured": []})
    if report.failed or report.skipped:
        entry["ok"] = False
    entry["measured"] += [v for k, v in report.user_properties if k == "measured"]


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_results):
        entry = _results[n]
        status = "PASS" if entry["ok"] else "FAIL"
        detail = "; ".join(entry["measured"])
        terminalreporter.write_line(f"criterion {n}: {status}" + (f"  ({detail})" if detail else ""))
