import numpy as np
import pytest

from sarsbl.baseline import AdmmConfig, l1_admm, nufft_baseline, nufft_l1, soft_threshold
from sarsbl.core import SceneGrid, plan_subapertures
from sarsbl.nufft import MatrixOperator, ml_estimate
from sarsbl.regularizers import identity, tv2d
from sarsbl.solver import window_operator

from conftest import cartesian_operator, crandn, polar_problem


def test_soft_threshold_values():
    x = np.array([3j, -0.5, 2 + 0j, 0.0])
    np.testing.assert_allclose(soft_threshold(x, 1.0), [2j, 0.0, 1.0, 0.0])


@pytest.mark.parametrize("lam,beta", [(0.5, 1.0), (1.0, 4.0), (0.05, 0.3)])
@pytest.mark.parametrize("path", ["diagonal", "cg"])
def test_identity_forward_is_soft_threshold(rng, lam, beta, path):
    g = SceneGrid(4, 4, 1.0)
    op = MatrixOperator(np.eye(16, dtype=complex), g)
    d = crandn(rng, 16)
    cfg = AdmmConfig(lam=lam, beta=beta, rho=beta, iters=400, path=path, cg_tol=1e-14,
                     cg_max_iters=5)
    out = l1_admm(d, op, identity(g), cfg).values
    np.testing.assert_allclose(out, soft_threshold(d, lam / beta), atol=1e-10, rtol=0)


def test_zero_lambda_unitary_is_adjoint(rng):
    g = SceneGrid(4, 4, 1.0)
    Q, _ = np.linalg.qr(crandn(rng, 16, 16))
    op = MatrixOperator(Q, g)
    d = crandn(rng, 16)
    out = l1_admm(d, op, identity(g), AdmmConfig(lam=0.0, iters=50)).values
    np.testing.assert_allclose(out, Q.conj().T @ d, atol=1e-6)


def test_lambda_sweep_monotone():
    grid, spec, ph = polar_problem()
    w = plan_subapertures(ph.azimuths, 40, 10)[0]
    op = window_operator(ph, w, grid)
    d = ph.window_data(w)
    norms = [np.abs(nufft_l1(d, op, identity(grid), AdmmConfig(lam=lam)).values).sum()
             for lam in (1 / 80, 1 / 60, 1 / 40, 1 / 20)]
    assert all(b < a for a, b in zip(norms, norms[1:]))


@pytest.mark.parametrize("kind", ["identity", "tv"])
def test_primal_residual_drops(rng, kind):
    g = SceneGrid(16, 16, 8.0)
    op = cartesian_operator(g)
    T = identity(g) if kind == "identity" else tv2d(g)
    f = np.zeros(g.N, dtype=complex)
    f[[40, 100, 200]] = [1.0, 2j, -1.5]
    d = op.apply(f) + 0.01 * crandn(rng, op.M)
    trace = []
    nufft_l1(d, op, T, AdmmConfig(lam=0.05), trace=trace)
    assert len(trace) == 20
    assert trace[-1] <= trace[0] / 10


def test_nufft_baseline_alias(rng):
    grid, spec, ph = polar_problem(n=32, pulses=180)
    w = plan_subapertures(ph.azimuths, 40, 10)[2]
    op = window_operator(ph, w, grid)
    d = ph.window_data(w)
    np.testing.assert_array_equal(nufft_baseline(d, op).values, ml_estimate(op, d).values)
    assert np.all(nufft_baseline(np.zeros_like(d), op).values == 0)


def test_point_round_trip():
    g = SceneGrid(32, 32, 16.0)
    op = cartesian_operator(g)
    e = np.zeros(g.N)
    e[g.center_index] = 1
    est = np.abs(nufft_baseline(op.apply(e), op).values)
    assert int(np.argmax(est)) == g.center_index and est.max() == pytest.approx(1, rel=0.05)


def test_diagonal_path_requires_identity():
    g = SceneGrid(4, 4, 1.0)
    with pytest.raises(ValueError):
        l1_admm(np.zeros(16), MatrixOperator(np.eye(16), g), tv2d(g), AdmmConfig(path="diagonal"))


@pytest.mark.parametrize("kw", [{"lam": -1}, {"rho": 0}, {"iters": 0}, {"beta": 0}, {"path": "x"}])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        AdmmConfig(**kw)
