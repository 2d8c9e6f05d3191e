import numpy as np
import pytest

from gridsync import scenario
from gridsync.integrator import integrate
from gridsync.model import GridModel


def two_area(omega=(0.0, 0.0, 0.0, 0.0), alpha=0.125, intra=2.0, inter=0.2, mode="cc"):
    K = np.array([
        [0.0, intra, inter, inter],
        [intra, 0.0, inter, inter],
        [inter, inter, 0.0, intra],
        [inter, inter, intra, 0.0],
    ])
    return GridModel.from_mode(omega, alpha, K, [1, 1, 2, 2], mode)


def pair(k=1.0, sign=1, omega=(0.0, 0.0), alpha=0.0):
    K = np.array([[0.0, k], [k, 0.0]])
    S = np.array([[1, sign], [sign, 1]])
    return GridModel(omega=np.array(omega, dtype=float), alpha=alpha, coupling=K, sign=S, area_of=[1, 2])


@pytest.fixture(scope="session")
def case1_run():
    spec = scenario.builtin("case1")
    model = spec.build_model()
    return model, integrate(model, spec.run)


@pytest.fixture(scope="session")
def case2_run():
    spec = scenario.builtin("case2")
    model = spec.build_model()
    return model, integrate(model, spec.run)
