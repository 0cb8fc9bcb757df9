from __future__ import annotations

import pytest

from slaglab import pipeline
from slaglab.config import Config

# criterion number -> (status, one-line detail), filled in by test_acceptance
RESULTS: dict[int, tuple[str, str]] = {}


@pytest.fixture(scope="session")
def sweep() -> pipeline.SweepReport:
    """The default sweep, alpha in {0.2, 0.1, 0.05, 0.025}; computed once per session."""
    return pipeline.run(Config())


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(RESULTS):
        status, detail = RESULTS[k]
        tr.write_line(f"criterion {k:>2} {status:<4} {pipeline.CRITERIA[k]}: {detail}")
