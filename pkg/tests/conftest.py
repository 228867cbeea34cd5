import math

import numpy as np
import pytest
from hypothesis import settings

from srtrack.eikonal import EikonalProblem, Mode, solve
from srtrack.fields import GridSpec, ScalarField3
from srtrack.geometry import MetricParams

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


@pytest.fixture(scope="session")
def small_uniform_pt():
    """PT distance map from the origin on a 33x33x16 grid, C = 1, xi = 1."""
    spec = GridSpec.centered(33, 0.1, 16, math.pi)
    prob = EikonalProblem(ScalarField3.constant(spec, 1.0), MetricParams(1.0, 0.1), [(0, 0, 0)], Mode.PT)
    W, rep = solve(prob)
    return prob, W, rep


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# -- acceptance summary ------------------------------------------------------

_ACCEPTANCE: dict = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    if report.when == "call" or report.outcome != "passed":
        name = report.nodeid.split("::")[-1]
        num = int(name.split("_")[2])
        detail = dict(report.user_properties).get("detail", "")
        prev = _ACCEPTANCE.get(num)
        if prev is None or prev[0] == "PASS":
            _ACCEPTANCE[num] = ("PASS" if report.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_ACCEPTANCE):
        status, detail = _ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:2d}: {status}  {detail}")
