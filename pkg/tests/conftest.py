import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from fluorspec.core import SystemParams

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

RABI_RATIOS = (0.0, 0.25, 0.5, 1.0, 4.0)


def make_params(gamma=1.0, ratio=1.0, omega0=1e7):
    return SystemParams(gamma, ratio * gamma, omega0)


@st.composite
def params_strategy(draw, min_ratio=0.0, max_ratio=20.0):
    gamma = draw(st.floats(1e-2, 1e2))
    ratio = draw(st.floats(min_ratio, max_ratio))
    return SystemParams(gamma, ratio * gamma, 1e7 * gamma)


@st.composite
def bloch_states(draw):
    """Random valid density matrix in Bloch coordinates."""
    r = draw(st.floats(0.0, 1.0))
    polar = draw(st.floats(0.0, np.pi))
    phi = draw(st.floats(0.0, 2 * np.pi))
    z = r * np.cos(polar)
    x = r * np.sin(polar) * np.cos(phi)
    y = r * np.sin(polar) * np.sin(phi)
    from fluorspec.core import BlochState

    return BlochState(0.5 * (1 + z), 0.5 * x, 0.5 * y)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)
