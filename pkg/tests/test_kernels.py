"""The numba kernels and the numpy fallback must agree."""
import os
import subprocess
import sys

import numpy as np
import pytest

from sarsbl import _kernels

numba_only = pytest.mark.skipif(_kernels.interp_numba is None, reason="numba unavailable")


def _setup(rng, nf=(40, 36), M=500, width=12):
    ux = rng.uniform(-nf[1] / 2, nf[1] / 2, M)
    uy = rng.uniform(-nf[0] / 2, nf[0] / 2, M)
    return ux, uy, width, 2.30 * width


@numba_only
def test_interp_backends_agree(rng):
    ux, uy, w, b = _setup(rng)
    G = rng.standard_normal((40, 36)) + 1j * rng.standard_normal((40, 36))
    np.testing.assert_allclose(_kernels.interp_numba(G, ux, uy, w, b),
                               _kernels.interp_numpy(G, ux, uy, w, b), rtol=1e-11, atol=1e-11)


@numba_only
def test_spread_backends_agree(rng):
    ux, uy, w, b = _setup(rng)
    c = rng.standard_normal(ux.size) + 1j * rng.standard_normal(ux.size)
    np.testing.assert_allclose(_kernels.spread_numba(c, ux, uy, 40, 36, w, b),
                               _kernels.spread_numpy(c, ux, uy, 40, 36, w, b), rtol=1e-11, atol=1e-11)


def test_spread_is_interp_transpose(rng):
    ux, uy, w, b = _setup(rng, M=60)
    G = rng.standard_normal((40, 36)) + 1j * rng.standard_normal((40, 36))
    c = rng.standard_normal(60) + 1j * rng.standard_normal(60)
    lhs = np.vdot(c, _kernels.interp(G, ux, uy, w, b))
    rhs = np.vdot(_kernels.spread(c, ux, uy, 40, 36, w, b), G)
    assert abs(lhs - rhs) <= 1e-12 * abs(lhs)


def test_kernel_shape():
    # support is |z| <= width / 2 in fine-grid samples
    z = np.array([-6.5, -6.0, 0.0, 3.0, 6.5])
    k = _kernels.es_kernel(z, 12, 27.6)
    assert k[0] == 0 and k[4] == 0 and k[2] == 1
    assert 0 < k[1] < k[3] < 1


def test_env_flag_selects_numpy():
    env = dict(os.environ, SARSBL_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", "import sarsbl; print(sarsbl.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
