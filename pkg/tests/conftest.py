import os

# Allow up to 8 worker threads for the parallelism-determinism checks even
# on smaller machines; must be set before numba is first imported.
os.environ.setdefault("NUMBA_NUM_THREADS", "8")

import pytest  # noqa: E402

_ACCEPTANCE_RESULTS: list[tuple[str, str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call":
        return
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, description = marker.args
    _ACCEPTANCE_RESULTS.append((number, description, report.outcome.upper()))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for number, description, outcome in sorted(_ACCEPTANCE_RESULTS, key=lambda r: r[0]):
        status = "PASS" if outcome == "PASSED" else "FAIL"
        terminalreporter.write_line(f"[criterion {number}] {status} - {description}")
