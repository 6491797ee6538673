"""Shared pytest hooks: collect and print acceptance-criterion results."""

ACCEPTANCE_RESULTS: list[tuple[int, str, str]] = []


def record_criterion(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE_RESULTS.append((number, "PASS" if passed else "FAIL", detail))


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running desk-scale training")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number, status, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"criterion {number}: {status} — {detail}")
