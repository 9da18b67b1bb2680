"""Shared fixtures for the fockbench tests."""

import numpy as np
import pytest

from fockbench.config import WorkbenchSettings, set_settings
from fockbench.models import RunConfig
from fockbench.sampling import InstanceSampler


@pytest.fixture(autouse=True)
def reset_settings():
    """Every test starts and ends with the default settings."""
    set_settings(None)
    yield
    set_settings(None)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def sampler():
    return InstanceSampler(seed=7, trial=0, salt=0)


@pytest.fixture
def small_settings():
    """Settings with dense checks small enough for quick runs."""
    return WorkbenchSettings(dense_level=3, instances_per_trial=2, max_workers=2)


@pytest.fixture
def small_config():
    """A run configuration that finishes in seconds."""
    return RunConfig(n=2, m=1, level=4, margin=1, trials=1, seed=11, workers=1)
