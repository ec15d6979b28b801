import numpy as np
import pytest

from quasidual.grid import Mesh, first_eigenfunction
from quasidual.problem import (Constant, Cosine, CriticalType, PowerOfDistance, ProblemSpec,
                               Sublinear)


def make_spec(gamma=2.0, sigma=1.5, case="sublinear", n=255, dimension=1, p=0.5, q=4.0,
              b=None, lam=1.0):
    mesh = Mesh(dimension, n)
    b = b if b is not None else Constant(1.0)
    nonlin = Sublinear(p, b) if case == "sublinear" else CriticalType(q, b)
    return ProblemSpec(gamma, PowerOfDistance(1.0, sigma), nonlin, mesh, lam)


@pytest.fixture
def sublinear_spec():
    return make_spec()


@pytest.fixture
def critical_spec():
    return make_spec(case="critical", q=4.0)


@pytest.fixture
def cosine_spec():
    return make_spec(b=Cosine(1.0))


@pytest.fixture
def phi1(sublinear_spec):
    return first_eigenfunction(sublinear_spec.mesh)[0]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance summary: each criterion records one line, printed after the run

_ACCEPTANCE = {}


@pytest.fixture(scope="session")
def acceptance_log():
    def record(number, title, passed, detail):
        _ACCEPTANCE[number] = (bool(passed), title, detail)
        return bool(passed)
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        passed, title, detail = _ACCEPTANCE[number]
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{verdict}] criterion {number:2d} {title}: {detail}")
