import pytest

from avsearch.corpus import synth_corpus


@pytest.fixture(scope="session")
def small_corpus():
    """20 clips, 40-word vocabularies, 60% transcribed, mild feature noise."""
    return synth_corpus(20, 40, 40, transcript_coverage=0.6, noise_sigma=0.05, seed=13)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    reports = []
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            if getattr(report, "when", "call") != "call":
                continue
            if "test_acceptance.py" in str(getattr(report, "nodeid", "")):
                reports.append((report.nodeid.split("::")[-1], outcome.upper()))
    if reports:
        terminalreporter.write_sep("=", "acceptance criteria")
        for name, outcome in sorted(reports):
            terminalreporter.write_line(f"{outcome:6s} {name}")
