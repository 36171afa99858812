import pytest

from chowrobbins.verify import cached_sweep

_criteria: list[tuple[str, str]] = []


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    for key, value in report.user_properties:
        if key == "criterion":
            _criteria.append(("PASS" if report.passed else "FAIL", value))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for status, text in _criteria:
        terminalreporter.write_line(f"{status}  {text}")


@pytest.fixture(scope="session")
def sweep_1e3():
    return cached_sweep(1_000)


@pytest.fixture(scope="session")
def sweep_1e5():
    return cached_sweep(100_000, record_limit=1_000)
