import numpy as np
import pytest

from holosparse.config import ExperimentConfig
from holosparse.geometry import BasisCache, BasisKind, UpaGeometry

# lengths in these fixtures are in wavelengths (λ = 1)
WAVELENGTH = 1.0


@pytest.fixture
def rng():
    return np.random.default_rng(20240)


@pytest.fixture
def desk_receive():
    return UpaGeometry(17, 17, 0.25)


@pytest.fixture
def desk_transmit():
    return UpaGeometry(5, 5, 0.25)


@pytest.fixture
def desk_bases(desk_receive, desk_transmit):
    return (
        BasisCache.get(desk_receive, BasisKind.WAVENUMBER, WAVELENGTH),
        BasisCache.get(desk_transmit, BasisKind.WAVENUMBER, WAVELENGTH),
    )


@pytest.fixture
def tiny_config():
    return ExperimentConfig(
        name="tiny",
        receive_nx=9,
        receive_ny=9,
        transmit_nx=3,
        transmit_ny=3,
        n_rf=4,
        pilot_length=8,
        sweep_variable="snr_db",
        sweep_values=(0.0, 10.0),
        trials=4,
        master_seed=7,
    )
