# conftest.py

import os
import sys
import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
from src.spectral.core import TorusGrid


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def grid1d():
    return TorusGrid(1, 32)


@pytest.fixture
def grid2d():
    return TorusGrid(2, 16)


@pytest.fixture
def base_config(tmp_path):
    return {
        "schema_version": "parapde-config/1",
        "seed": 7,
        "replicas": 4,
        "workers": 1,
        "batch_size": 2,
        "fixtures_dir": str(tmp_path / "fixtures"),
    }
