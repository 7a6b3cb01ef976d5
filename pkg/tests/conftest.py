import numpy as np
import pytest

from thermotumor.core.config import settings
from thermotumor.schemas.controls import StepControls
from thermotumor.schemas.params import ModelParams
from tests.factories import make_grid


@pytest.fixture(autouse=True)
def deterministic_settings(monkeypatch):
    """Single-thread mode and the documented solver defaults for every test"""
    monkeypatch.setattr(settings, "MAX_WORKERS", 1)
    monkeypatch.setattr(settings, "MAX_DT_HALVINGS", 10)
    monkeypatch.setattr(settings, "NEWTON_DAMPING_FLOOR", 2.0 ** -10)
    yield


@pytest.fixture
def params():
    return ModelParams()


@pytest.fixture
def controls():
    return StepControls(dt=1e-3)


@pytest.fixture
def grid():
    return make_grid(dim=1, cells=16)


@pytest.fixture
def grid_2d():
    return make_grid(dim=2, cells=4)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
