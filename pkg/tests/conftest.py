import os

import numpy as np
import pytest

from vpc_forge.corpus import data_path, load_desk
from vpc_forge.model import load_instance, standardize

os.environ.setdefault("HYPOTHESIS_PROFILE", "ci")

try:
    from hypothesis import settings

    settings.register_profile("ci", deadline=None, derandomize=True, print_blob=True)
    settings.load_profile("ci")
except ImportError:  # pragma: no cover
    pass


@pytest.fixture(scope="session")
def toy_k():
    return standardize(load_instance(data_path("toy_k.json")))


@pytest.fixture(scope="session")
def example1():
    return standardize(load_instance(data_path("example1.json")))


@pytest.fixture(scope="session")
def desk():
    return [standardize(i) for i in load_desk()]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
