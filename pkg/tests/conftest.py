import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import make_fixture_bank, make_fixture_scene, make_fixture_split


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def fixture_scene():
    return make_fixture_scene()

@pytest.fixture
def fixture_split():
    return make_fixture_split()


@pytest.fixture
def fixture_bank():
    return make_fixture_bank()


@pytest.fixture
def fixture_table(fixture_scene, fixture_split):
    from sceneforge import compute_category_stats

    return compute_category_stats([fixture_scene], fixture_split)
