import numpy as np
import pytest

from sarsbl.core import SceneGrid


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running end-to-end checks")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def grid8():
    return SceneGrid(8, 8, 4.0)


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def cartesian_operator(grid, oversample=1):
    """Exactly orthogonal full-band NUFFT operator (F*F = M I)."""
    from sarsbl.core import FreqCoords
    from sarsbl.nufft import NUFFTOperator
    from sarsbl.simulator import cartesian_acquisition

    acq = cartesian_acquisition(grid, oversample)
    k = acq.k[:, 0]
    return NUFFTOperator(grid, FreqCoords(k * np.cos(acq.azimuths), k * np.sin(acq.azimuths)))


def polar_problem(n=64, pulses=360, alpha_bg=1e4, beta_true=100.0, targets=True, seed=0):
    """Small polar-format scene with speckle, noise and optional point targets."""
    from sarsbl.simulator import Scatterer, SceneSpec, polar_acquisition, synthesize

    grid = SceneGrid(n, n, n / 2)
    scat = []
    if targets:
        scat = [Scatterer(n // 2, n // 2, 1.0),
                Scatterer(n // 4, 3 * n // 4, 1j, visible=(0.0, np.deg2rad(40.0)))]
    spec = SceneSpec(grid, scat, alpha_bg, seed)
    acq = polar_acquisition(grid, pulses, n, beta_true=beta_true)
    return grid, spec, synthesize(spec, acq)
