import numpy as np
import pytest

from synth import make_noise, make_speech


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def speech():
    return make_speech(duration=1.0, seed=11)


@pytest.fixture
def long_speech():
    return make_speech(duration=3.0, seed=12)


@pytest.fixture
def noise():
    return make_noise(duration=1.0, seed=13, kind="lowpass")
