import numpy as np
import pytest

from antenna_model import synthesize_antenna
from channel import CodingContext, sample_channel
from config import AntennaConfig, ExperimentConfig, RectennaParams, Settings


@pytest.fixture
def antenna_cfg() -> AntennaConfig:
    return AntennaConfig()


@pytest.fixture
def params() -> RectennaParams:
    return RectennaParams()


@pytest.fixture
def settings(tmp_path) -> Settings:
    return Settings(SEED=None, WORKERS=1, CACHE_DB_PATH=tmp_path / "cache.db")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.Generator(np.random.Philox(20240611))


@pytest.fixture(scope="session")
def small_antenna():
    """Q=4, K=4, N_eff=2: достаточно мал для полного перебора."""
    return synthesize_antenna(3, q=4, k=4, target_rank=2, cfg=AntennaConfig())


@pytest.fixture(scope="session")
def ctx(small_antenna) -> CodingContext:
    return CodingContext(small_antenna, AntennaConfig())


@pytest.fixture
def power() -> float:
    return ExperimentConfig().transmit_power_watts


@pytest.fixture
def channel_2x2(ctx):
    """M = N = 2 beamspace channel with the default 66 dB path loss."""
    cfg = ExperimentConfig()
    return sample_channel(11, 2 * ctx.n_eff, 2 * ctx.n_eff, cfg.amplitude_scale)


@pytest.fixture
def small_experiment() -> ExperimentConfig:
    return ExperimentConfig(
        m=1, n=1, q=4, k=4, target_rank=2, antenna_seed=3, trials=4, master_seed=5,
        sebo={"block_size": 8, "rounds": 2},
        qn={"restarts": 2, "max_iters": 40},
        loop={"outer_max_iter": 3, "sca_max_iter": 100},
    )
