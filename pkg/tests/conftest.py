import numpy as np
import pytest
from hypothesis import settings

from pftrl import games
from pftrl.strategy import random_profile

settings.register_profile("pkg", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("pkg")


@pytest.fixture(scope="session")
def kuhn():
    return games.build("kuhn")


@pytest.fixture(scope="session")
def toy():
    return games.build("one_card_toy")


@pytest.fixture(scope="session")
def pennies():
    return games.build("matching_pennies")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def interior_pair(tree, rng):
    return random_profile(tree, rng), random_profile(tree, rng)
