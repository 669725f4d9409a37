from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from signedvol.cone import ConeSystem

from systems import unit_square

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def square() -> ConeSystem:
    return unit_square()


_CRITERIA = pytest.StashKey[dict]()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(key, title): acceptance criterion covered by the test")
    config.stash[_CRITERIA] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when == "teardown" and not rep.failed:
        return
    key, title = marker.args
    entry = item.config.stash[_CRITERIA].setdefault(key, {"title": title, "passed": 0, "failed": [], "seconds": 0.0})
    # setup time counts too: module fixtures hold the long runs
    entry["seconds"] += rep.duration
    if rep.failed:
        entry["failed"].append(item.name)
    elif rep.when == "call":
        entry["passed"] += 1


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_CRITERIA, {})
    if not results:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for key in sorted(results, key=lambda k: (int(str(k).rstrip("s")), str(k))):
        r = results[key]
        status = "FAIL" if r["failed"] else "PASS"
        detail = f" (failed: {', '.join(r['failed'])})" if r["failed"] else ""
        terminalreporter.write_line(f"criterion {key}: {status}  {r['title']}  [{r['seconds']:.1f}s]{detail}")
