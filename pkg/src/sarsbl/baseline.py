"""Comparison image formers: matched-filter NUFFT and l1-regularised MAP via ADMM."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ComplexImage
from .linalg import pcg
from .nufft import ml_estimate, unit_normalized
from .regularizers import PhaseMatrix, SparsifyingOperator, phase_from


@dataclass(frozen=True)
class AdmmConfig:
    lam: float = 1 / 20
    beta: float = 1.0
    rho: float = 1.0
    iters: int = 20
    path: str = "cg"
    cg_tol: float = 1e-6
    cg_max_iters: int = 10

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if not self.rho > 0:
            raise ValueError("ADMM penalty rho must be positive")
        if not self.beta > 0:
            raise ValueError("data weight beta must be positive")
        if self.iters < 1:
            raise ValueError("iters must be at least 1")
        if self.path not in ("cg", "diagonal"):
            raise ValueError("path must be 'cg' or 'diagonal'")


def soft_threshold(x, t):
    """Complex soft thresholding: shrink the modulus by ``t``, keep the phase."""
    x = np.asarray(x)
    mag = np.abs(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(mag > t, 1.0 - t / np.where(mag > 0, mag, 1.0), 0.0)
    return x * scale


def l1_admm(data, op, T: SparsifyingOperator, config: AdmmConfig | None = None,
            theta: PhaseMatrix | None = None, trace: list | None = None) -> ComplexImage:
    """ADMM for ``min (beta/2)||data - F f||^2 + lam ||T Θ* f||_1``.

    ``Θ`` is fixed from the matched-filter image unless given. The split is
    ``z = T Θ* f`` with a scaled dual; the ``f`` step is either solved by
    warm-started CG on the exact normal equations or, for ``T = I``, by the
    diagonal ``F*F ~ rho_F I`` surrogate. Primal residual norms are appended
    to ``trace`` when it is supplied.
    """
    cfg = config or AdmmConfig()
    data = np.asarray(data, dtype=np.complex128).ravel()
    g = op.apply_adjoint(data)
    f = g * op.ml_scale
    if theta is None:
        theta = phase_from(f)
    rho_f = op.gram_diag()
    beta, rho = cfg.beta, cfg.rho

    def R(v):
        return T.apply(theta.apply_adjoint(v))

    def Rh(w):
        return theta.apply(T.apply_adjoint(w))

    if cfg.path == "diagonal" and not T.is_identity:
        raise ValueError("the diagonal f-step requires the identity regularizer")
    jacobi = beta * rho_f + rho * T.abs_sq_adjoint(np.ones(T.Q))

    def normal(v):
        return beta * op.gram_apply(v) + rho * Rh(R(v))

    z = R(f)
    u = np.zeros_like(z)
    for _ in range(cfg.iters):
        rhs = beta * g + rho * Rh(z - u)
        if cfg.path == "diagonal":
            f = rhs / (beta * rho_f + rho)
        else:
            f, _info = pcg(normal, rhs, x0=f, diag=jacobi, tol=cfg.cg_tol,
                           max_iter=cfg.cg_max_iters)
        Rf = R(f)
        z = soft_threshold(Rf + u, cfg.lam / rho)
        u = u + Rf - z
        if not np.all(np.isfinite(f)):
            raise FloatingPointError("ADMM produced non-finite iterates")
        if trace is not None:
            trace.append(float(np.linalg.norm(Rf - z)))
    return ComplexImage(op.grid, f)


def nufft_l1(data, op, T: SparsifyingOperator, config: AdmmConfig | None = None,
             trace: list | None = None) -> ComplexImage:
    """:func:`l1_admm` on the ``1/sqrt(M)``-normalised problem.

    With this scaling ``lam / beta`` is a threshold on the image amplitude
    scale of :func:`~sarsbl.nufft.ml_estimate`.
    """
    nop, ndata = unit_normalized(op, data)
    return l1_admm(ndata, nop, T, config, trace=trace)


def nufft_baseline(data, op) -> ComplexImage:
    return ml_estimate(op, data)
