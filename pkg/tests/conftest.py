import sys
from pathlib import Path

# make the shared fixtures module importable from every test file
sys.path.insert(0, str(Path(__file__).parent))


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            status, title = results[n]
            terminalreporter.write_line(f"{status} criterion {n}: {title}")
