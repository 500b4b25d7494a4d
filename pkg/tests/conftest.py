import pytest

_CRITERIA: dict[str, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(code, text): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    code, text = marker.args
    if report.when == "call" or (report.when == "setup" and report.failed):
        detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
        _CRITERIA[code] = ("PASS" if report.passed else "FAIL", text, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for code in sorted(_CRITERIA, key=lambda c: int(c[1:])):
        verdict, text, detail = _CRITERIA[code]
        line = f"{code} {verdict}  {text}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
