import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def hands():
    """Pipeline results for synthetic hands with 0..5 fingers (seed 0)."""
    from gngiemd.gng import GngParams
    from gngiemd.ingest import synth_hand
    from gngiemd.pipeline import process_mask

    return {f: process_mask(synth_hand(f, seed=0), GngParams(seed=0)) for f in range(6)}


def pytest_terminal_summary(terminalreporter):
    lines = [value for reports in terminalreporter.stats.values() for r in reports
             for key, value in getattr(r, "user_properties", ()) if key == "acceptance"]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(set(lines)):
            terminalreporter.write_line(line)
