"""Shared test hooks: echo acceptance verdict lines after the run.

Output captured during tests is only replayed for failures; the acceptance
suite records its one-line-per-criterion verdicts here so they always appear
in the terminal summary.
"""

_acceptance_lines: list[str] = []


def record_acceptance(line: str) -> None:
    _acceptance_lines.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config) -> None:
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.line(line)
