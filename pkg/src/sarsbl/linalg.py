"""Preconditioned conjugate gradients for Hermitian positive-definite systems."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class CGInfo:
    iterations: int
    residual: float
    converged: bool


def pcg(apply_A, b, x0=None, diag=None, tol=1e-8, max_iter=200, precond=None):
    """Solve ``A x = b`` with preconditioned CG.

    ``apply_A`` maps a complex vector to ``A @ v``. The preconditioner is
    either ``precond`` (a callable approximating ``A^{-1} r``) or Jacobi
    scaling by ``diag``; with neither, plain CG is used. ``tol`` is relative
    to ``||b||``. Returns ``(x, CGInfo)``; the last iterate is returned even
    when the iteration cap is hit.
    """
    b = np.asarray(b, dtype=np.complex128)
    bnorm = np.linalg.norm(b)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=np.complex128)
    if bnorm == 0:
        return np.zeros_like(b), CGInfo(0, 0.0, True)
    if precond is None:
        inv_d = None if diag is None else 1.0 / np.asarray(diag)
        precond = (lambda r: r) if inv_d is None else (lambda r: inv_d * r)
    r = b - apply_A(x) if np.any(x) else b.copy()
    rnorm = np.linalg.norm(r)
    if rnorm <= tol * bnorm:
        return x, CGInfo(0, rnorm / bnorm, True)
    z = precond(r)
    p = z.copy()
    rz = np.vdot(r, z).real
    for it in range(1, max_iter + 1):
        Ap = apply_A(p)
        denom = np.vdot(p, Ap).real
        if denom <= 0:
            return x, CGInfo(it, rnorm / bnorm, False)
        step = rz / denom
        x += step * p
        r -= step * Ap
        rnorm = np.linalg.norm(r)
        if rnorm <= tol * bnorm:
            return x, CGInfo(it, rnorm / bnorm, True)
        z = precond(r)
        rz_new = np.vdot(r, z).real
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, CGInfo(max_iter, rnorm / bnorm, False)
