import pytest

# Filled by the makereport hook for tests listed in test_acceptance.CRITERIA;
# rendered as one line per criterion at the end of the session.
_ACCEPTANCE_RESULTS: list[tuple[str, bool]] = []


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
        _ACCEPTANCE_RESULTS.append((label, report.passed))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed in _ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}")
