import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gpclab.carima import CarimaModel

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def ex1():
    return CarimaModel(a=[-0.5, -0.8], b=[0, 0, 2, 1, 0.5])


@pytest.fixture
def ex2():
    return CarimaModel(a=[-0.5, -0.8], b=[0, 0, 0, 1, 0.5])


@pytest.fixture
def trivial():
    return CarimaModel(a=[0], b=[1])


def random_model(rng, na_max=4, nb_max=4, delay=None):
    na = int(rng.integers(1, na_max + 1))
    nb = int(rng.integers(0, nb_max + 1))
    a = rng.uniform(-1, 1, na)
    b = rng.uniform(-1, 1, nb + 1)
    if delay is not None:
        nb = max(nb, delay - 1)
        b = rng.uniform(-1, 1, nb + 1)
        b[: delay - 1] = 0.0
        b[delay - 1] = rng.choice([-1, 1]) * rng.uniform(0.5, 1.5)
    elif not np.any(b):
        b[0] = 1.0
    return CarimaModel(a=a, b=b)


_criteria = {}


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py::test_criterion_" in report.nodeid:
        name = report.nodeid.split("::")[-1].split("[")[0]
        _criteria.setdefault(name, []).append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_criteria):
        num = int(name.split("_")[2])
        verdict = "PASS" if all(o == "passed" for o in _criteria[name]) else "FAIL"
        terminalreporter.write_line(f"criterion {num:2d}: {verdict}  ({name})")
