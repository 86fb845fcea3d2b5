import pytest

from appellstop.levy import LevyModel
from appellstop.reward import power_reward, two_sided_reward
from appellstop.solver import StoppingProblem, infer_eta_mode


@pytest.fixture
def bm():
    return LevyModel(0.0, 1.0, 0.02)


@pytest.fixture(scope="session")
def two_sided_problem():
    g = two_sided_reward(0.1, 0.05)
    return StoppingProblem(LevyModel(0.0, 1.0, 0.02), g, infer_eta_mode(g))


@pytest.fixture(scope="session")
def linear_problem():
    g = power_reward(1)
    return StoppingProblem(LevyModel(0.0, 1.0, 0.02), g, infer_eta_mode(g))
