import sys


def pytest_terminal_summary(terminalreporter):
    """Replay acceptance verdict lines so they survive output capture."""
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "VERDICTS", None) if module else None
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
