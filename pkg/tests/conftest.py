import os
import sys

sys.path.insert(0, os.path.dirname(__file__))


def pytest_terminal_summary(terminalreporter):
    """Echo one line per acceptance criterion after the run."""
    try:
        import test_acceptance
    except ImportError:
        return
    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for name, verdict in test_acceptance.RESULTS:
            terminalreporter.write_line(f"ACCEPTANCE {name}: {verdict}")
