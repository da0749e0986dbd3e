"""Suite-level reporting: surface the acceptance checklist in the summary."""

ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance checklist")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
