import re
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import politeness_kit as pk

FIXTURES = Path(__file__).parent / "fixtures"

_CRITERION = re.compile(r"test_(p\d+|s\d+)_")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL/NOT-RUN line per acceptance criterion."""
    results = {}
    for outcome, status in (("passed", "PASS"), ("failed", "FAIL"), ("skipped", "NOT RUN")):
        for report in terminalreporter.stats.get(outcome, ""):
            if "test_acceptance" not in report.nodeid:
                continue
            match = _CRITERION.search(report.nodeid)
            if not match:
                continue
            criterion = match.group(1).upper()
            note = ""
            if status == "NOT RUN":
                longrepr = getattr(report, "longrepr", None)
                if isinstance(longrepr, tuple) and len(longrepr) == 3:
                    note = f" ({longrepr[2].removeprefix('Skipped: ')})"
            current = results.get(criterion)
            if current is None or status == "FAIL":
                results[criterion] = status + note
    if results:
        terminalreporter.write_sep("-", "acceptance criteria")
        for criterion in sorted(results):
            terminalreporter.write_line(f"{criterion}: {results[criterion]}")


@pytest.fixture(scope="session")
def lexicons():
    return pk.bundled_lexicons()


@pytest.fixture(scope="session")
def table3():
    return {r.id: r for r in pk.read_requests(FIXTURES / "table3.conllu")}


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES
