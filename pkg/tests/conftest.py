import numpy as np
import pytest

from naviseg import (AllocationConfig, BallScheduleParams, CameraRig, Popularity,
                     RateTable, SceneModel, make_popularity, synthesize_rate_table)


@pytest.fixture
def small_rig():
    return CameraRig.linear(10)


@pytest.fixture
def small_table():
    return synthesize_rate_table(10, "constant", (10.0, 2.0), q_label="test")


@pytest.fixture
def scene():
    return SceneModel(width=640.0, height=480.0, focal=615.0, z_min=1.0,
                      z_max=10.0, d_inp=100.0, d_rec=1.0)


@pytest.fixture
def table_i():
    """Table-I-style schedule: 30 fps, request every 90 frames, 90 s session."""
    def make(delta):
        return BallScheduleParams(frame_rate=30.0, request_interval=90,
                                  tau_max=1.0, delta=delta, duration=90.0)
    return make


def random_instance(seed, n_min=2, n_max=12):
    """Random rate table + popularity with h_I > h_P > 0."""
    rng = np.random.default_rng(seed)
    n_v = int(rng.integers(n_min, n_max + 1))
    h_p = rng.uniform(1.0, 50.0, n_v)
    h_i = h_p + rng.uniform(1.0, 100.0, n_v)
    w = rng.uniform(0.01, 1.0, n_v)
    return RateTable("rnd", h_i, h_p), Popularity(w / w.sum()), n_v
