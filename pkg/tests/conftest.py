import re

_CRITERIA: dict[int, tuple[str, str, str]] = {}
_PATTERN = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)")


def pytest_runtest_logreport(report):
    m = _PATTERN.search(report.nodeid)
    if not m:
        return
    num, name = int(m.group(1)), m.group(2)
    detail = dict(report.user_properties).get("detail", "")
    if report.when == "call" or report.failed:
        if report.passed:
            outcome = "PASS"
        elif report.skipped:
            outcome = "SKIP"
        else:
            outcome = "FAIL"
        # a setup or teardown failure overrides a passing call
        if num not in _CRITERIA or outcome == "FAIL":
            _CRITERIA[num] = (name, outcome, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        name, outcome, detail = _CRITERIA[num]
        line = f"{outcome}  criterion {num:>2}  {name.replace('_', ' ')}"
        terminalreporter.write_line(f"{line}  [{detail}]" if detail else line)
