import pytest

from mzprobe.config import load_config

WAVELENGTH_M = 780.241e-9


@pytest.fixture(scope="session")
def worked_config():
    return load_config("worked_example")


@pytest.fixture(scope="session")
def small_config():
    """Worked config with statistics cut down for fast structural tests."""
    cfg = load_config("worked_example")
    experiment = cfg.experiment.model_copy(update={
        "noise_seeds": 3,
        "snr_seeds": 3,
        "trace_duration_s": 0.05,
        "scan_points": 9,
        "locked_duration_s": 0.2,
        "locked_replicates": 2,
    })
    return cfg.model_copy(update={"experiment": experiment})
