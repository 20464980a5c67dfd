import pytest

# Same per-criterion reporting idea as the client suite: tests listed in a
# module-level CRITERIA dict get one summary line each.
_RESULTS: list[tuple[str, bool]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call":
        return
    criteria = getattr(item.module, "CRITERIA", None)
    if not criteria:
        return
    label = criteria.get(item.name.split("[")[0])
    if label:
        _RESULTS.append((label, report.passed))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("worker acceptance criteria")
    for label, passed in _RESULTS:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}")
