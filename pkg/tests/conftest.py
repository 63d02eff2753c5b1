import pytest

from wikicite.registry import load_default_registry


@pytest.fixture(scope="session")
def starter_registry():
    return load_default_registry()


# acceptance reporting -------------------------------------------------

_acceptance_lines: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call":
        _acceptance_lines[name] = "PASS" if report.passed else (
            "SKIP" if report.skipped else "FAIL"
        )
    elif report.when == "setup" and (report.skipped or report.failed):
        _acceptance_lines[name] = "SKIP" if report.skipped else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_lines:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_acceptance_lines):
        terminalreporter.write_line(f"{name}: {_acceptance_lines[name]}")
