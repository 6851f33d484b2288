import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    max_examples=60,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("ci", max_examples=200, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def random_hermitian(rng, n, scale=1.0):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (a + a.conj().T) / 2


def random_state(rng, n):
    from nmdyn.model import InitialState

    psi = rng.normal(size=n) + 1j * rng.normal(size=n)
    psi0 = complex(rng.normal(), rng.normal())
    return InitialState.normalized(psi0, psi)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile the numba kernels once so timed tests measure steady-state cost."""
    from nmdyn import _kernels

    d = np.array([[0.0, 1.0]])
    _kernels.population_rates_grid(d, d + 1.0, np.ones_like(d))
    K = np.zeros((3, 1, 1), dtype=complex)
    _kernels.volterra_march(K, K, np.ones((1, 1), dtype=complex), 0.1)
    _kernels.friedrichs_march(
        np.ones(1, dtype=complex), np.zeros(1), np.eye(1, dtype=complex),
        np.zeros(2), np.full(2, 2**-0.5), 0.1, np.array([0, 1]), np.array([0.0, 0.1]),
    )
