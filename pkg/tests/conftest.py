"""Per-criterion summary lines for the acceptance suite."""

import re

_CRITERION = re.compile(r"test_criterion_(\d+)")
_results: dict = {}


def _skip_reason(report) -> str:
    if isinstance(report.longrepr, tuple):
        reason = report.longrepr[2]
        return reason.removeprefix("Skipped: ")
    return ""


def pytest_runtest_logreport(report):
    match = _CRITERION.search(report.nodeid)
    if match is None:
        return
    num = int(match.group(1))
    if report.when == "setup":
        if report.skipped:
            _results[num] = ("SKIP", _skip_reason(report))
        elif report.failed:
            _results[num] = ("FAIL", "errored during setup")
    elif report.when == "call":
        if report.passed:
            _results[num] = ("PASS", "")
        elif report.skipped:
            _results[num] = ("SKIP", _skip_reason(report))
        else:
            _results[num] = ("FAIL", "")


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for num in sorted(_results):
        status, why = _results[num]
        line = f"criterion {num:2d}: {status}"
        if why:
            line += f" ({why})"
        terminalreporter.write_line(line)
