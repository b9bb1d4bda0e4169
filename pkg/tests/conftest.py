# one line per acceptance criterion, repeated in the terminal summary so the
# results show up without -s
CRITERIA: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERIA, key=lambda s: int(s.split("]")[0].split()[-1])):
            terminalreporter.write_line(line)
