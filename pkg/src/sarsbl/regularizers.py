"""Sparsifying operators, unitary phase matrices and the common-kernel check."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .core import ComplexImage, SceneGrid

KINDS = ("identity", "tv2d-anisotropic")


@dataclass(frozen=True)
class SparsifyingOperator:
    """Real ``Q x N`` operator ``T``.

    ``identity`` has ``Q = N``. ``tv2d-anisotropic`` stacks horizontal then
    vertical forward differences (``Q = 2N``) with a replicated edge, so the
    last column/row of each difference field is zero and constants lie in
    the kernel.
    """

    kind: str
    grid: SceneGrid

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown sparsifying operator {self.kind!r}; expected one of {KINDS}")

    @property
    def N(self) -> int:
        return self.grid.N

    @property
    def Q(self) -> int:
        return self.N if self.kind == "identity" else 2 * self.N

    @property
    def is_identity(self) -> bool:
        return self.kind == "identity"

    def apply(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v).ravel()
        if self.is_identity:
            return v.copy()
        img = v.reshape(self.grid.shape)
        dh = np.zeros_like(img)
        dv = np.zeros_like(img)
        dh[:, :-1] = img[:, 1:] - img[:, :-1]
        dv[:-1, :] = img[1:, :] - img[:-1, :]
        return np.concatenate([dh.ravel(), dv.ravel()])

    def apply_adjoint(self, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w).ravel()
        if self.is_identity:
            return w.copy()
        N = self.N
        dh = w[:N].reshape(self.grid.shape)
        dv = w[N:].reshape(self.grid.shape)
        out = np.zeros_like(dh)
        out[:, 1:] += dh[:, :-1]
        out[:, :-1] -= dh[:, :-1]
        out[1:, :] += dv[:-1, :]
        out[:-1, :] -= dv[:-1, :]
        return out.ravel()

    def abs_sq_adjoint(self, a: np.ndarray) -> np.ndarray:
        """``(T∘T)^T a``: the diagonal of ``T^T diag(a) T``."""
        a = np.asarray(a, dtype=np.float64).ravel()
        if self.is_identity:
            return a.copy()
        N = self.N
        ah = a[:N].reshape(self.grid.shape)
        av = a[N:].reshape(self.grid.shape)
        out = np.zeros_like(ah)
        out[:, 1:] += ah[:, :-1]
        out[:, :-1] += ah[:, :-1]
        out[1:, :] += av[:-1, :]
        out[:-1, :] += av[:-1, :]
        return out.ravel()

    def to_sparse(self) -> sp.csr_matrix:
        if self.is_identity:
            return sp.identity(self.N, format="csr")
        ny, nx = self.grid.shape

        def diff(n):
            d = sp.diags([-np.ones(n), np.ones(n - 1)], [0, 1], shape=(n, n), format="lil")
            d[n - 1, n - 1] = 0.0
            return d.tocsr()

        Dh = sp.kron(sp.identity(ny), diff(nx))
        Dv = sp.kron(diff(ny), sp.identity(nx))
        return sp.vstack([Dh, Dv]).tocsr()

    def dense(self) -> np.ndarray:
        return self.to_sparse().toarray()


def identity(grid: SceneGrid) -> SparsifyingOperator:
    return SparsifyingOperator("identity", grid)


def tv2d(grid: SceneGrid) -> SparsifyingOperator:
    return SparsifyingOperator("tv2d-anisotropic", grid)


def make_operator(kind: str, grid: SceneGrid) -> SparsifyingOperator:
    aliases = {"identity": "identity", "i": "identity", "tv": "tv2d-anisotropic",
               "tv2d": "tv2d-anisotropic", "tv2d-anisotropic": "tv2d-anisotropic"}
    try:
        return SparsifyingOperator(aliases[kind.lower()], grid)
    except KeyError:
        raise ValueError(f"unknown regularizer {kind!r}") from None


@dataclass(frozen=True)
class PhaseMatrix:
    """Diagonal unitary matrix stored as its unit-modulus diagonal."""

    diag: np.ndarray

    def __post_init__(self):
        d = np.ascontiguousarray(self.diag, dtype=np.complex128).ravel()
        if not np.allclose(np.abs(d), 1.0, rtol=0, atol=1e-12):
            raise ValueError("phase matrix entries must have unit modulus")
        d.setflags(write=False)
        object.__setattr__(self, "diag", d)

    def apply(self, v):
        return self.diag * v

    def apply_adjoint(self, v):
        return np.conj(self.diag) * v


def phase_from(img) -> PhaseMatrix:
    """Phase of each pixel; zero pixels get phase 1."""
    f = img.values if isinstance(img, ComplexImage) else np.asarray(img, dtype=np.complex128).ravel()
    mag = np.abs(f)
    out = np.ones(f.shape, dtype=np.complex128)
    nz = mag > 0
    out[nz] = f[nz] / mag[nz]
    # renormalise away rounding in the division
    out[nz] /= np.abs(out[nz])
    return PhaseMatrix(out)


def check_common_kernel(F_small, T: SparsifyingOperator, theta: PhaseMatrix | None = None,
                        rtol: float = 1e-10) -> bool:
    """Whether ``kernel(F)`` and ``kernel(T Θ*)`` intersect only at zero.

    Decided by the numerical rank of the stacked dense matrix.
    """
    F = np.atleast_2d(np.asarray(F_small, dtype=np.complex128))
    N = F.shape[1]
    if N > 4096:
        raise ValueError(f"dense kernel check limited to N <= 4096, got {N}")
    if T.N != N:
        raise ValueError("operator sizes disagree")
    R = T.dense().astype(np.complex128)
    if theta is not None:
        R = R * np.conj(theta.diag)[None, :]
    s = np.linalg.svd(np.vstack([F, R]), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return False
    return int(np.sum(s > rtol * s[0])) == N
