import numpy as np
import pytest

from mecsim.config import SimConfig, with_overrides
from mecsim.radio import EvalContext
from mecsim.scenario import generate_scenario


@pytest.fixture
def base_config() -> SimConfig:
    return SimConfig()


@pytest.fixture
def small_scenario():
    cfg = with_overrides(SimConfig(), n_ue=6, fading="constant")
    return generate_scenario(cfg, seed=3)


@pytest.fixture
def small_context(small_scenario):
    return EvalContext(small_scenario)


def random_config(rng: np.random.Generator, n_ue: int | None = None) -> SimConfig:
    n = int(rng.integers(1, 8)) if n_ue is None else n_ue
    return with_overrides(SimConfig(), n_ue=n,
                          fading="constant" if rng.random() < 0.5 else "exponential")
