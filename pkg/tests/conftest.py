import numpy as np
import pytest

from ffagent.qnet import QNetwork, QNetworkConfig
from ffagent.stream import SyntheticConfig, generate_synthetic


@pytest.fixture
def hand_net():
    """2-2-2-2 relu net with small hand-picked weights."""
    cfg = QNetworkConfig(input_dim=2, output_dim=2, hidden_dims=(2, 2))
    weights = [
        np.array([[1.0, -0.5], [0.25, 2.0]]),
        np.array([[0.5, 1.0], [-1.0, 0.75]]),
        np.array([[2.0, 0.0], [1.0, -1.0]]),
    ]
    biases = [np.array([0.1, -0.2]), np.array([0.0, 0.3]), np.array([-0.5, 0.25])]
    return QNetwork(cfg, weights, biases)


@pytest.fixture(scope="session")
def small_synthetic():
    return generate_synthetic(SyntheticConfig(num_videos=4, frames_per_video=150, feature_dim=6,
                                              num_important_segments=3, segment_length_range=(8, 16), seed=11))


def constant_net(input_dim: int, n_actions: int, preferred: int) -> QNetwork:
    """Network whose output is a constant vector peaking at ``preferred``."""
    cfg = QNetworkConfig(input_dim=input_dim, output_dim=n_actions, hidden_dims=(2, 2))
    net = QNetwork(cfg)
    for w in net.weights:
        w[:] = 0.0
    for b in net.biases:
        b[:] = 0.0
    net.biases[-1][preferred] = 1.0
    return net
