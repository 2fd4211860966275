import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    # Surface the one-line acceptance verdicts in the run report even when
    # output capture is active.
    lines = []
    for name, mod in list(sys.modules.items()):
        if name.rsplit(".", 1)[-1] == "test_acceptance" and mod is not None:
            lines = getattr(mod, "VERDICT_LINES", [])
            if lines:
                break
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
