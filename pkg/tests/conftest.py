import pytest
from hypothesis import settings

import kronlab

settings.register_profile("deterministic", derandomize=True, deadline=None)
settings.load_profile("deterministic")


@pytest.fixture(scope="session")
def golden_freq():
    return kronlab.FrequencyTuple.parse("golden-1")


@pytest.fixture(scope="session")
def sqrt2_freq():
    return kronlab.FrequencyTuple.parse("sqrt(2)-1")


@pytest.fixture(scope="session")
def pair_freq():
    return kronlab.FrequencyTuple.parse(["sqrt(2)-1", "sqrt(3)-1"])


@pytest.fixture(scope="session")
def golden_seq12(golden_freq):
    return kronlab.convergent_sequence(golden_freq, 2.0, 12)


@pytest.fixture(scope="session")
def golden_seq20(golden_freq):
    return kronlab.convergent_sequence(golden_freq, 2.0, 20)
