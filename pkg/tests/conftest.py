"""Shared pytest hooks.

The acceptance tests append one status line per criterion to
``acceptance_report``; the terminal-summary hook prints the collected lines
after the run so they are visible under any capture mode.
"""

acceptance_report: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if acceptance_report:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_report:
            terminalreporter.write_line(line)
