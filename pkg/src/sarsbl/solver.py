"""Per-window Bayesian coordinate descent (sparse Bayesian learning).

Each window is modelled as ``data = F f + n`` with a complex Gaussian prior
on ``T Θ* f`` whose per-coefficient precisions ``alpha`` and the noise
precision ``beta`` carry Gamma hyperpriors. The iteration alternates the
conditional means of ``alpha`` and ``beta``, the Gaussian posterior mean of
``f`` and the phase matrix ``Θ`` until the mean stops moving.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .core import AperturePlan, ComplexImage, PhaseHistory, SceneGrid, freq_coords
from .linalg import CGInfo, pcg
from .nufft import NUFFTOperator
from .regularizers import PhaseMatrix, SparsifyingOperator, phase_from

log = logging.getLogger(__name__)

MACHINE_EPS = float(np.finfo(np.float64).eps)
PATHS = ("auto", "diagonal", "general")
PRECONDITIONERS = ("surrogate", "jacobi")


@dataclass(frozen=True)
class SolverConfig:
    eps: float = 0.01
    max_iters: int = 100
    a: float = MACHINE_EPS
    b: float = MACHINE_EPS
    c: float = MACHINE_EPS
    d: float = MACHINE_EPS
    path: str = "auto"
    cg_tol: float = 1e-8
    cg_max_iters: int = 200
    preconditioner: str = "surrogate"
    alpha_max: float = 1e30
    beta_max: float = 1e30
    hutchinson_probes: int = 64
    dense_cov_limit: int = 1024
    seed: int = 0

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("convergence tolerance eps must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if min(self.a, self.b, self.c, self.d) < 0:
            raise ValueError("hyper-hyperparameters a, b, c, d must be nonnegative")
        for name in ("alpha_max", "beta_max"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and positive")
        if self.path not in PATHS:
            raise ValueError(f"path must be one of {PATHS}")
        if self.preconditioner not in PRECONDITIONERS:
            raise ValueError(f"preconditioner must be one of {PRECONDITIONERS}")

    def resolve_path(self, T: SparsifyingOperator) -> str:
        if self.path == "auto":
            return "diagonal" if T.is_identity else "general"
        if self.path == "diagonal" and not T.is_identity:
            raise ValueError("the diagonal fast path requires the identity regularizer")
        return self.path


@dataclass
class SubAperturePosterior:
    """Gaussian approximation ``CN(mu, Sigma)`` for one window plus hyperparameters."""

    mu: ComplexImage
    alpha: np.ndarray
    beta: float
    theta: PhaseMatrix
    precision_diag: np.ndarray
    path: str
    regularizer: str
    rho: float
    iterations: int
    converged: bool
    degenerate: bool = False
    trace: list = field(default_factory=list)
    window: int | None = None
    _op: object = field(default=None, repr=False, compare=False)
    _T: object = field(default=None, repr=False, compare=False)
    _config: object = field(default=None, repr=False, compare=False)
    _cov_diag: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def grid(self) -> SceneGrid:
        return self.mu.grid

    def apply_precision(self, v: np.ndarray) -> np.ndarray:
        """``Sigma^{-1} v`` with the exact forward operator."""
        if self._op is None:
            raise RuntimeError("posterior was loaded without its operator")
        return _precision_apply(self._op, self._T, self.theta, self.alpha, self.beta)(v)

    def covariance_diagonal(self, method: str = "auto") -> np.ndarray:
        """Diagonal of ``Sigma``.

        The diagonal path is exact under its surrogate. Otherwise small
        problems invert the dense precision and larger ones use Hutchinson
        probing with CG solves.
        """
        if self._cov_diag is not None and method == "auto":
            return self._cov_diag
        if self.path == "diagonal":
            out = 1.0 / self.precision_diag
        else:
            if self._op is None:
                raise RuntimeError("covariance of a general-path posterior needs its operator")
            cfg = self._config or SolverConfig()
            if method == "auto":
                method = "dense" if self.grid.N <= cfg.dense_cov_limit else "hutchinson"
            if method == "dense":
                out = _dense_cov_diag(self.apply_precision, self.grid.N)
            elif method == "hutchinson":
                pc = _preconditioner(cfg.preconditioner, self._T, self.theta, self.alpha,
                                     self.beta, self.rho)
                out = _hutchinson_cov_diag(self.apply_precision, self.grid.N, pc, cfg)
            else:
                raise ValueError(f"unknown covariance method {method!r}")
        if method == "auto" or self.path == "diagonal":
            self._cov_diag = out
        return out


class WindowError(RuntimeError):
    def __init__(self, window: int, cause: Exception):
        super().__init__(f"window {window}: {cause}")
        self.window = window
        self.cause = cause


def update_alpha(mu, theta: PhaseMatrix, T: SparsifyingOperator, a: float, b: float,
                 alpha_max: float = 1e30) -> np.ndarray:
    mu = np.asarray(mu.values if isinstance(mu, ComplexImage) else mu).ravel()
    coef = T.apply(theta.apply_adjoint(mu))
    with np.errstate(divide="ignore"):
        alpha = (1.0 + 2.0 * a) / (np.abs(coef) ** 2 + 2.0 * b)
    return np.minimum(alpha, alpha_max)


def update_beta(data, op, mu, c: float, d: float, beta_max: float = 1e30,
                Fmu: np.ndarray | None = None) -> float:
    data = np.asarray(data).ravel()
    if Fmu is None:
        mu = mu.values if isinstance(mu, ComplexImage) else mu
        Fmu = op.apply(mu)
    resid = float(np.vdot(data - Fmu, data - Fmu).real)
    M = data.size
    with np.errstate(divide="ignore"):
        beta = np.float64(M + 2.0 * c) / np.float64(resid + 2.0 * d)
    return float(min(beta, beta_max))


def _precision_apply(op, T, theta, alpha, beta):
    if T.is_identity:
        def apply(v):
            return beta * op.gram_apply(v) + alpha * v
    else:
        def apply(v):
            return beta * op.gram_apply(v) + theta.apply(
                T.apply_adjoint(alpha * T.apply(theta.apply_adjoint(v))))
    return apply


def surrogate_preconditioner(T: SparsifyingOperator, theta: PhaseMatrix, alpha, beta: float,
                             rho: float):
    """Exact inverse of the surrogate precision ``beta rho I + Θ T' diag(alpha) T Θ*``.

    The surrogate differs from the true precision only through ``F*F - rho I``,
    so it captures the coefficients whose ``alpha`` has grown by many orders of
    magnitude, where Jacobi scaling alone leaves CG hopelessly conditioned.
    The real sparse matrix is LU-factored once per call.
    """
    Ts = T.to_sparse()
    S = (beta * rho * sp.identity(T.N, format="csc")
         + (Ts.T @ sp.diags(np.asarray(alpha, dtype=np.float64)) @ Ts)).tocsc()
    lu = spla.splu(S)
    ph = theta.diag

    def apply(r):
        v = np.conj(ph) * r
        return ph * (lu.solve(np.ascontiguousarray(v.real)) + 1j * lu.solve(np.ascontiguousarray(v.imag)))

    return apply


def _preconditioner(kind, T, theta, alpha, beta, rho):
    if kind == "surrogate":
        return {"precond": surrogate_preconditioner(T, theta, alpha, beta, rho)}
    return {"diag": beta * rho + T.abs_sq_adjoint(alpha)}


def update_mu(op, data, alpha, beta: float, T: SparsifyingOperator, theta: PhaseMatrix,
              path: str = "diagonal", *, Fstar_data=None, rho: float | None = None,
              mu_prev=None, cg_tol: float = 1e-8, cg_max_iters: int = 200,
              preconditioner: str = "surrogate"):
    """Posterior mean ``[beta F*F + (TΘ*)* diag(alpha) TΘ*]^{-1} beta F* data``.

    Returns ``(mu, info)``; ``info`` is ``None`` on the diagonal path and a
    :class:`~sarsbl.linalg.CGInfo` on the general path, which runs
    warm-started CG preconditioned by ``preconditioner`` (``"surrogate"`` or
    ``"jacobi"``).
    """
    g = op.apply_adjoint(data) if Fstar_data is None else Fstar_data
    if rho is None:
        rho = op.gram_diag()
    if path == "diagonal":
        if not T.is_identity:
            raise ValueError("the diagonal fast path requires the identity regularizer")
        return beta * g / (beta * rho + alpha), None
    if path != "general":
        raise ValueError(f"unknown path {path!r}")
    if preconditioner not in PRECONDITIONERS:
        raise ValueError(f"unknown preconditioner {preconditioner!r}")
    mu, info = pcg(_precision_apply(op, T, theta, alpha, beta), beta * g, x0=mu_prev,
                   tol=cg_tol, max_iter=cg_max_iters,
                   **_preconditioner(preconditioner, T, theta, alpha, beta, rho))
    if not info.converged:
        log.warning("CG stopped after %d iterations at relative residual %.3g",
                    info.iterations, info.residual)
    return mu, info


def run_window(data, op, T: SparsifyingOperator, config: SolverConfig | None = None,
               window: int | None = None) -> SubAperturePosterior:
    config = config or SolverConfig()
    data = np.ascontiguousarray(data, dtype=np.complex128).ravel()
    if data.size != op.M:
        raise ValueError(f"window has {data.size} samples but the operator expects {op.M}")
    if not np.all(np.isfinite(data)):
        raise ValueError("phase history contains non-finite samples")
    if T.N != op.N:
        raise ValueError("regularizer and operator disagree on the image size")
    path = config.resolve_path(T)

    g = op.apply_adjoint(data)
    rho = op.gram_diag()
    mu = g * op.ml_scale
    theta = phase_from(mu)
    degenerate = not np.any(data)

    trace = []
    converged = False
    alpha = np.full(T.Q, config.alpha_max)
    beta = config.beta_max
    info = None
    it = 0
    for it in range(1, config.max_iters + 1):
        alpha = update_alpha(mu, theta, T, config.a, config.b, config.alpha_max)
        beta = update_beta(data, op, mu, config.c, config.d, config.beta_max)
        mu_new, info = update_mu(op, data, alpha, beta, T, theta, path, Fstar_data=g, rho=rho,
                                 mu_prev=mu, cg_tol=config.cg_tol,
                                 cg_max_iters=config.cg_max_iters,
                                 preconditioner=config.preconditioner)
        theta = phase_from(mu_new)
        norm = float(np.linalg.norm(mu))
        change = float(np.linalg.norm(mu_new - mu)) / norm if norm > 0 else 0.0
        mu = mu_new
        trace.append({
            "iteration": it,
            "rel_change": change,
            "beta": beta,
            "alpha_mean": float(np.mean(alpha)),
            "alpha_median": float(np.median(alpha)),
            "mu_abs_mean": float(np.mean(np.abs(mu))),
            "cg_iterations": None if info is None else info.iterations,
        })
        if norm == 0 or change <= config.eps:
            converged = True
            break

    if path == "diagonal":
        prec = beta * rho + alpha
    else:
        prec = beta * rho + T.abs_sq_adjoint(alpha)
    return SubAperturePosterior(
        mu=ComplexImage(op.grid, mu), alpha=alpha, beta=beta, theta=theta,
        precision_diag=prec, path=path, regularizer=T.kind, rho=rho, iterations=it,
        converged=converged, degenerate=degenerate, trace=trace, window=window,
        _op=op, _T=T, _config=config)


def window_operator(ph: PhaseHistory, window, grid: SceneGrid, **nufft_kw) -> NUFFTOperator:
    return NUFFTOperator(grid, freq_coords(window, ph), **nufft_kw)


def map_windows(fn, plan: AperturePlan, workers: int = 1):
    """Apply ``fn(window)`` to every window, preserving window order."""
    def call(w):
        try:
            return fn(w)
        except WindowError:
            raise
        except Exception as exc:
            raise WindowError(w.index, exc) from exc

    if workers <= 1:
        return [call(w) for w in plan]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(call, plan))


def run_all(ph: PhaseHistory, plan: AperturePlan, grid: SceneGrid, T: SparsifyingOperator,
            config: SolverConfig | None = None, workers: int = 1,
            **nufft_kw) -> list[SubAperturePosterior]:
    """Run every window independently; results are ordered by window index.

    Windows share nothing mutable, so the output does not depend on
    ``workers``.
    """
    config = config or SolverConfig()

    def solve(w):
        op = window_operator(ph, w, grid, **nufft_kw)
        return run_window(ph.window_data(w), op, T, config, window=w.index)

    return map_windows(solve, plan, workers)


def _dense_cov_diag(apply_prec, N: int) -> np.ndarray:
    P = np.empty((N, N), dtype=np.complex128)
    e = np.zeros(N, dtype=np.complex128)
    for j in range(N):
        e[j] = 1.0
        P[:, j] = apply_prec(e)
        e[j] = 0.0
    P = 0.5 * (P + P.conj().T)
    return np.real(np.diag(np.linalg.inv(P)))


def _hutchinson_cov_diag(apply_prec, N: int, precond: dict, cfg: SolverConfig) -> np.ndarray:
    rng = np.random.default_rng(cfg.seed)
    acc = np.zeros(N)
    for _ in range(cfg.hutchinson_probes):
        z = rng.choice([-1.0, 1.0], size=N).astype(np.complex128)
        x, _info = pcg(apply_prec, z, tol=cfg.cg_tol, max_iter=cfg.cg_max_iters, **precond)
        acc += (z.conj() * x).real
    return np.maximum(acc / cfg.hutchinson_probes, 0.0)
