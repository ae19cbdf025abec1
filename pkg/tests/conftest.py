import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=500, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

FAMILIES = ("rational", "log", "atan")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=FAMILIES)
def family(request):
    return request.param


# --------------------------------------------------------------------------
# acceptance criteria: one PASS/FAIL line per criterion
# --------------------------------------------------------------------------

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    if rep.when == "call" or rep.failed:
        detail = dict(item.user_properties).get("detail", "")
        _CRITERIA[mark.args[0]] = (mark.args[1], rep.passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, ok, detail = _CRITERIA[n]
        tr.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {title}"
                      + (f"  [{detail}]" if detail else ""))
