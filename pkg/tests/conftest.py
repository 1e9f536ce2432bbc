import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from posetrainer import synthetic

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=300, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def good_curl():
    return synthetic.bicep_curl(swing=12.0, min_elbow=40.0, source_id="bicep_good_1")


@pytest.fixture
def bad_curl():
    return synthetic.bicep_curl(swing=48.0, min_elbow=95.0, source_id="bicep_bad_1")


ACCEPTANCE_RESULTS = []


@pytest.fixture
def criterion(request):
    """Record one acceptance criterion's outcome for the terminal summary."""
    entry = {"name": request.node.name, "detail": ""}

    def note(detail):
        entry["detail"] = detail

    yield note
    failed = getattr(request.node, "rep_call", None) is None or request.node.rep_call.failed
    ACCEPTANCE_RESULTS.append((entry["name"], not failed, entry["detail"]))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
