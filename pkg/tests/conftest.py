import pytest

_ACCEPTANCE: list[tuple[str, str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    setattr(item, f"rep_{report.when}", report)


@pytest.fixture
def criterion(request):
    """Record a pass/fail line for an acceptance criterion; the test fills in ``details``."""
    details: dict[str, str] = {}
    yield details
    report = getattr(request.node, "rep_call", None)
    verdict = "PASS" if report is not None and report.passed else "FAIL"
    _ACCEPTANCE.append((request.node.name, verdict, details.get("summary", "")))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, verdict, summary in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"{verdict}  {name}  {summary}".rstrip())
