import numpy as np
import pytest

from config.config import TOPOLOGY_CONFIG
from app.core.channel import Topology
from app.core.engine import FixedRatio, SweepSpec


@pytest.fixture
def topology():
    return Topology.from_config(TOPOLOGY_CONFIG)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def make_spec(topology):
    """Small sweep spec; keyword arguments override the defaults"""
    def _make(**overrides):
        settings = dict(topology=topology, K=8, trials_per_point=600, seed=42,
                        snr_points=(0.0, 10.0), ratio_mode=FixedRatio(0.5), scheme="both",
                        block_size=256)
        settings.update(overrides)
        return SweepSpec(**settings)
    return _make
