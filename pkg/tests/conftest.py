import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dropletbif import MapModel, Variant

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

X_HAT = -math.pi / 2


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def gilet():
    return MapModel(Variant.GILET, 0.5, 0.45)


def random_states(rng, n, xlo=-math.pi, xhi=0.0, ylo=-1.0, yhi=1.0):
    return np.column_stack([rng.uniform(xlo, xhi, n), rng.uniform(ylo, yhi, n)])


# --- acceptance reporting: one PASS/FAIL line per criterion -------------------

_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n, title = mark.args
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        _CRITERIA[n] = (title, rep.outcome, rep.duration)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, outcome, dur = _CRITERIA[n]
        word = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {n:2d}: {word}  {title}  ({dur:.1f} s)")
