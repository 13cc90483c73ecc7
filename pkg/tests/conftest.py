import pytest

_criteria: list[tuple[str, str, float, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call":
        return
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    status = "PASS" if rep.passed else "FAIL"
    _criteria.append((status, mark.args[0], rep.duration, detail))
    line = f"[{status}] {mark.args[0]} ({rep.duration:.1f} s) {detail}".rstrip()
    reporter = item.config.pluginmanager.get_plugin("terminalreporter")
    if reporter is not None:
        reporter.write_line("")
        reporter.write_line(line)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for status, name, duration, detail in _criteria:
        terminalreporter.write_line(f"[{status}] {name} ({duration:.1f} s) {detail}".rstrip())
    passed = sum(s == "PASS" for s, *_ in _criteria)
    terminalreporter.write_line(f"{passed}/{len(_criteria)} criteria passed")
