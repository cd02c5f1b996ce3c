import numpy as np
import pytest

from components.experiments import ExperimentConfig


@pytest.fixture
def rng():
    """Seeded generator shared by a single test."""
    return np.random.default_rng(2017)


@pytest.fixture
def small_config():
    """Reduced geometry that keeps every sweep under a second per trial."""
    return ExperimentConfig(
        experiment="NmseVsSnr",
        N=64,
        K=4,
        N_RF=4,
        L=2,
        V=4,
        Q=32,
        snr_ul_db=[0.0, 10.0],
        snr_dl_db=[0.0, 20.0],
        trials=2,
        seed=7,
        estimators=["SD", "OMP", "SMD", "PerfectCSI"],
    )
