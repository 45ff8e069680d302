import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from models.systems import (BernoulliShift, FiniteMarkovShift, GaussMap, RenewalShift,  # noqa: E402
                            Rotation, build_system)


@pytest.fixture(scope='session')
def renewal():
    return build_system(RenewalShift(1.5))


@pytest.fixture(scope='session')
def coin():
    return build_system(BernoulliShift((0.5, 0.5)))


@pytest.fixture(scope='session')
def markov2():
    return build_system(FiniteMarkovShift(((0.9, 0.1), (0.4, 0.6)), (0.8, 0.2)))


@pytest.fixture(scope='session')
def gauss():
    return build_system(GaussMap())


@pytest.fixture(scope='session')
def rotation():
    return build_system(Rotation(0.25))
