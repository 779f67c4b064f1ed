import math
import sys

import pytest
from hypothesis import settings

from lsvtaylor.model import zoo_heston_td, zoo_jdcev, zoo_three_halves

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

FIG1 = dict(kappa=1.15, theta0=0.06, theta1=-0.08, delta0=0.0625, delta1=-0.16,
            rho0=-0.125, rho1=0.32)
FIG1_EY = 0.05
FIG2 = dict(kappa=22.84, theta=0.4669 ** 2, delta=8.56, rho=-0.99)
FIG2_EY = 0.245 ** 2
FIG3 = dict(delta=0.2, beta=-0.4, b=0.04)


@pytest.fixture
def heston():
    def make(order=2, horizon=(0.0, 0.25)):
        return zoo_heston_td(**FIG1, point=(0.0, math.log(FIG1_EY)), order=order, horizon=horizon)
    return make


@pytest.fixture
def three_halves():
    def make(order=3):
        return zoo_three_halves(**FIG2, point=(0.0, math.log(FIG2_EY)), order=order)
    return make


@pytest.fixture
def jdcev():
    def make(c=2.0, x=0.0, order=4):
        return zoo_jdcev(**FIG3, c=c, point=(x, 0.0), order=order)
    return make


def pytest_terminal_summary(terminalreporter):
    acc = sys.modules.get("test_acceptance")
    if acc is not None and acc.RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(acc.RESULTS):
            terminalreporter.write_line(acc.RESULTS[n])
