import pytest

from dkern.kernel import build_evaluator


@pytest.fixture(scope="session")
def disc_ke():
    return build_evaluator({"disc": {"radius": 1}}, {"constant": 1})


@pytest.fixture(scope="session")
def annulus_ke():
    return build_evaluator({"annulus": {"inner": 0.3, "outer": 1}}, {"constant": 1})


@pytest.fixture(scope="session")
def weighted_disc_ke():
    return build_evaluator({"disc": {"radius": 1}}, {"disc_power": 1})
