"""
Fixtures compartilhadas: arranjos pequenos, canal em espaço livre e uma
configuração reduzida que roda um experimento completo em segundos
"""
import copy

import numpy as np
import pytest
import yaml

from channel.propagation import ChannelParams
from channel.room import free_space
from config.loader import config_from_dict
from geometry.array_layout import ArrayLayout

FREQUENCY = 28e9

SMALL_CONFIG = {
    "seed": 7,
    "bits": 2,
    "array": {"rows": 4, "cols": 4, "module_rows": 2, "module_cols": 2},
    "room": {"enabled": False},
    "ue": {"distance": 0.05},
    "agent": {"batch_size": 4, "buffer_capacity": 100, "knn_k": 4},
    "schedule": {"max_steps": 20, "window": 10, "parallel": False, "workers": 2},
    "map": {
        "half_extent": 0.02,
        "points": 5,
        "profile_start": 0.01,
        "profile_stop": 0.09,
        "profile_points": 5,
        "plots": False,
    },
}


@pytest.fixture
def params():
    return ChannelParams.from_frequency(FREQUENCY)


@pytest.fixture
def wavelength(params):
    return params.wavelength


@pytest.fixture
def room_off():
    return free_space()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_layout(wavelength):
    """4x4 elementos em 2x2 módulos de 2x2"""
    return ArrayLayout.from_shape(4, 4, 2, 2, wavelength / 2, origin=(1.0, 0.0, 1.5))


@pytest.fixture
def small_config_data():
    return copy.deepcopy(SMALL_CONFIG)


@pytest.fixture
def small_config(small_config_data):
    return config_from_dict(small_config_data)


@pytest.fixture
def config_file(tmp_path, small_config_data):
    path = tmp_path / "experiment.yaml"
    path.write_text(yaml.safe_dump(small_config_data), encoding="utf-8")
    return path


@pytest.fixture
def output_dir(tmp_path):
    return tmp_path / "output"
