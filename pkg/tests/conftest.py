import pytest

_results: list[tuple[str, str]] = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(name): acceptance criterion reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    name = marker.args[0]
    if report.when == "call":
        _results.append((name, "PASS" if report.passed else "SKIP" if report.skipped else "FAIL"))
    elif report.when == "setup" and not report.passed:
        _results.append((name, "SKIP" if report.skipped else "FAIL"))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for name, status in _results:
        terminalreporter.write_line(f"{status}  {name}")
