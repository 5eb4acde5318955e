import pytest

_RESULTS: dict[int, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number): acceptance criterion checked by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or report.when != "call" and not report.failed:
        return
    number = mark.args[0]
    detail = "; ".join(v for k, v in item.user_properties if k == "detail")
    entry = _RESULTS.setdefault(number, [True, []])
    entry[0] = entry[0] and report.passed
    if detail:
        entry[1].append(detail)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        ok, details = _RESULTS[number]
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}"
        if details:
            line += "  " + " | ".join(details)
        terminalreporter.write_line(line)
