from pathlib import Path

import pytest

from harim.records import read_annotations, read_likelihood_dump

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def fixture_records():
    with open(DATA / "dump_50.jsonl", encoding="utf-8") as fh:
        return read_likelihood_dump(fh, str(DATA / "dump_50.jsonl"))


@pytest.fixture(scope="session")
def fixture_pairs():
    with open(DATA / "pairs_50.jsonl", encoding="utf-8") as fh:
        return read_annotations(fh, "generic", str(DATA / "pairs_50.jsonl"))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    rows = []
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance" in nodeid and "::" in nodeid:
                status = "PASS" if outcome == "passed" else "FAIL"
                rows.append((nodeid.split("::")[-1], status))
    if rows:
        terminalreporter.section("acceptance criteria")
        for name, status in sorted(rows):
            terminalreporter.write_line(f"{status}  {name}")
