import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Replay the acceptance-criterion lines after the test run.

    pytest's fd-level capture swallows stdout of passing tests, so the
    one-line-per-criterion report is re-emitted here where it is always
    visible.
    """
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "CRITERION_LINES", None) if mod else None
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
