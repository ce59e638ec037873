import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from critlab import Dimension, NonlinearitySpec, find_ground_state
from critlab.core import derive_scale_constants
from critlab.rescale import build_rescaled_state
from critlab.spectral import spectral_certificate

SWEEP_OMEGAS = (10.0, 100.0, 1000.0)


@pytest.fixture(scope="session")
def d3():
    return Dimension(3)


@pytest.fixture(scope="session")
def d4():
    return Dimension(4)


@pytest.fixture(scope="session")
def g_t4():
    return NonlinearitySpec.power(4.0)


@pytest.fixture(scope="session")
def sweep_d3(g_t4, d3):
    """Reference sweep d=3, g=t^4 at n=2^14: omega -> (state, rescaled)."""
    out = {}
    for omega in SWEEP_OMEGAS:
        gs = find_ground_state(g_t4, d3, omega)
        out[omega] = (gs, build_rescaled_state(gs))
    return out


@pytest.fixture(scope="session")
def gs_d4(d4):
    return find_ground_state(NonlinearitySpec.power(2.0), d4, 2.0, n=2 ** 13)


@pytest.fixture(scope="session")
def constants_d3(d3):
    return derive_scale_constants(d3)


@pytest.fixture(scope="session")
def constants_d4(d4):
    return derive_scale_constants(d4)


@pytest.fixture(scope="session")
def ref_cert(sweep_d3):
    """Spectral certificate for the d=3, g=t^4, omega=100 reference case."""
    gs = sweep_d3[100.0][0]
    return spectral_certificate(gs, k_max=2, ladder_ns=(2 ** 13, 2 ** 14))
