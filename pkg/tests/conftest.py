"""Configuration file for pytest."""
import numpy as np
import pytest

from src.config import IsolatedSettings, use_settings
from src.levy.innovations import calibrated_spec
from src.schemas import InnovationKind, InnovationSpec, Observations


def pytest_configure(config):
    """Configure pytest with custom markers."""
    config.addinivalue_line(
        "markers", "integration: marks end-to-end runs through the CLI or the benchmark harness"
    )
    config.addinivalue_line(
        "markers", "unit: marks tests as unit tests"
    )
    config.addinivalue_line(
        "markers", "slow: marks tests with large inversion grids or many realizations"
    )


@pytest.fixture(autouse=True)
def isolated_settings():
    """Run every test with default settings, independent of LEVY_* variables."""
    yield use_settings(IsolatedSettings())


@pytest.fixture
def gaussian_spec():
    return InnovationSpec(kind=InnovationKind.GAUSSIAN, sigma=1.0)


@pytest.fixture
def poisson_spec():
    return InnovationSpec(kind=InnovationKind.COMPOUND_POISSON, poisson_rate=0.6, amplitude_sigma=1.0)


@pytest.fixture
def cauchy_spec():
    return calibrated_spec("cauchy")


@pytest.fixture
def laplace_spec():
    return calibrated_spec("variance_gamma")


@pytest.fixture
def stable_spec():
    return InnovationSpec(kind=InnovationKind.ALPHA_STABLE, alpha=1.5, stable_scale=1.0)


@pytest.fixture
def make_observations():
    """Build Observations from the noisy samples s~[1..m] (s~[0] = 0 is prepended)."""

    def build(samples, noise_variance=0.5, stride=1, clean=None):
        noisy = np.concatenate(([0.0], np.asarray(samples, dtype=float)))
        if clean is not None:
            clean = np.concatenate(([0.0], np.asarray(clean, dtype=float)))
        return Observations(
            noisy=noisy,
            noise_variance=noise_variance,
            stride=stride,
            fine_grid_length=(noisy.size - 1) * stride + 1,
            clean=clean,
        )

    return build
