import _acceptance_log


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_log.LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_acceptance_log.LINES, key=lambda s: int(s.split()[2])):
        terminalreporter.write_line(line)
