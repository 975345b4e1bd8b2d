import numpy as np
import pytest

from risnet.models.numerics import QuadratureConfig
from risnet.models.simulation import MonteCarloConfig
from risnet.models.system import ReferenceScenario, SystemParams


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def fast_quad() -> QuadratureConfig:
    """Coarser grids and tolerances that keep analytic tests quick"""
    return QuadratureConfig(
        rel_tol=1e-6,
        cluster_radial_nodes=12,
        cluster_angular_nodes=16,
        signal_radial_nodes=24,
        signal_angular_nodes=48,
    )


@pytest.fixture(scope="session")
def baseline_params() -> SystemParams:
    return ReferenceScenario.MCP_BASELINE.params()


@pytest.fixture(scope="session")
def snr_params(baseline_params: SystemParams) -> SystemParams:
    """Serving cell only: no interfering BSs"""
    return baseline_params.replace(include_interference=False)


@pytest.fixture(scope="session")
def small_window() -> MonteCarloConfig:
    """Truncated BS field so simulation tests stay cheap"""
    return MonteCarloConfig(r_max=1500.0, batch_size=128)
