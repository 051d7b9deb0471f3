import os
import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

_acceptance = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.split("::")[-1]
        _acceptance[name] = report.outcome.upper()


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_acceptance, key=lambda s: (len(s), s)):
        word = {"PASSED": "PASS", "FAILED": "FAIL", "SKIPPED": "SKIP"}[_acceptance[name]]
        terminalreporter.write_line(f"{word:4}  {name}")


@pytest.fixture(scope="session")
def tep_graph():
    from blockmon.flowsheet import load_tep_flowsheet

    return load_tep_flowsheet()


@pytest.fixture(scope="session")
def tep_blocks(tep_graph):
    from blockmon.decompose import DecompositionConfig, decompose

    return decompose(tep_graph, DecompositionConfig(control_aware=True))


@pytest.fixture(scope="session")
def synthetic_plant():
    """A 52-variable latent-factor process with a 500-sample training run."""
    from blockmon.evaluation import TEP_COLUMNS
    from blockmon.synthetic import LatentProcess

    proc = LatentProcess.random(TEP_COLUMNS, rng=20)
    return proc, proc.sample(500, rng=21, name="train")
