import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from core.config import AppConfig, PipelineConfig  # noqa: E402
from core.types import PolyChain  # noqa: E402
from storage.repository import FileRepository  # noqa: E402


@pytest.fixture
def config():
    return PipelineConfig()


@pytest.fixture
def app_config():
    return AppConfig(retry_delay=0.0)


@pytest.fixture
def repository(app_config):
    return FileRepository(app_config)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def horizontal_chain(y, x0=0.0, x1=100.0, step=10.0):
    xs = np.arange(x0, x1 + step / 2, step)
    return PolyChain.from_points((x, y) for x in xs)


def row_points(y, x0, x1, step):
    xs = np.arange(x0, x1 + step / 2, step, dtype=np.float64)
    return np.column_stack([xs, np.full_like(xs, y)])
