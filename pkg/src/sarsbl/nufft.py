"""Type-2 gridding NUFFT for sub-aperture phase history, plus exact DFT oracles.

The forward map is ``fhat_m = sum_j f_j exp(-i (kx_m x_j + ky_m y_j))`` with
pixel centres from :class:`~sarsbl.core.SceneGrid`.
"""
from __future__ import annotations

import threading

import numpy as np
import scipy.fft as sfft

from . import _kernels
from .core import ComplexImage, FreqCoords, SceneGrid

DEFAULT_OVERSAMP = 2.0
DEFAULT_WIDTH = 12
DIRECT_DFT_LIMIT = 100_000_000


def _fine_size(n: int, oversamp: float, width: int) -> int:
    nf = max(int(np.ceil(oversamp * n)), 2 * width)
    return nf + (nf % 2)


def _embed(g, img):
    """Place a centred image into a periodic fine grid (index ``j`` -> ``j mod nf``)."""
    ny, nx = img.shape
    cy, cx = ny // 2, nx // 2
    g[:ny - cy, :nx - cx] = img[cy:, cx:]
    g[:ny - cy, g.shape[1] - cx:] = img[cy:, :cx]
    g[g.shape[0] - cy:, :nx - cx] = img[:cy, cx:]
    g[g.shape[0] - cy:, g.shape[1] - cx:] = img[:cy, :cx]


def _extract(h, shape):
    ny, nx = shape
    cy, cx = ny // 2, nx // 2
    out = np.empty(shape, dtype=h.dtype)
    out[cy:, cx:] = h[:ny - cy, :nx - cx]
    out[cy:, :cx] = h[:ny - cy, h.shape[1] - cx:]
    out[:cy, cx:] = h[h.shape[0] - cy:, :nx - cx]
    out[:cy, :cx] = h[h.shape[0] - cy:, h.shape[1] - cx:]
    return out


class NUFFTOperator:
    """Forward operator ``F`` for one window and its exact adjoint.

    Parameters
    ----------
    grid : SceneGrid
    coords : FreqCoords
        Spatial frequencies (rad/m). After scaling by the pixel pitch every
        coordinate must lie in ``[-pi, pi)``; anything else raises.
    oversamp : float
        Oversampling factor of the fine FFT grid.
    width : int
        Kernel width in fine-grid samples.
    """

    ml_normalization = "1/M"

    def __init__(self, grid: SceneGrid, coords: FreqCoords,
                 oversamp: float = DEFAULT_OVERSAMP, width: int = DEFAULT_WIDTH):
        if oversamp < 1.5:
            raise ValueError("oversampling factor must be at least 1.5")
        if width < 2:
            raise ValueError("kernel width must be at least 2")
        self.grid = grid
        self.coords = coords
        self.oversamp = float(oversamp)
        self.width = int(width)
        self.kernel_beta = 2.30 * self.width

        wx = coords.kx * grid.dx
        wy = coords.ky * grid.dy
        bad = (wx < -np.pi) | (wx >= np.pi) | (wy < -np.pi) | (wy >= np.pi)
        if np.any(bad):
            m = int(np.argmax(bad))
            raise ValueError(
                f"frequency sample {m} ({coords.kx[m]:.6g}, {coords.ky[m]:.6g}) rad/m is outside "
                f"the band of a {grid.dx:.6g} x {grid.dy:.6g} m pixel grid")

        self.nfx = _fine_size(grid.nx, self.oversamp, self.width)
        self.nfy = _fine_size(grid.ny, self.oversamp, self.width)
        self._ux = np.ascontiguousarray(wx * self.nfx / (2 * np.pi))
        self._uy = np.ascontiguousarray(wy * self.nfy / (2 * np.pi))
        jx = np.arange(grid.nx) - grid.nx // 2
        jy = np.arange(grid.ny) - grid.ny // 2
        cx = _kernels.es_kernel_ft(2 * np.pi * jx / self.nfx, self.width, self.kernel_beta)
        cy = _kernels.es_kernel_ft(2 * np.pi * jy / self.nfy, self.width, self.kernel_beta)
        self._deconv = 1.0 / np.outer(cy, cx)
        self._gram_diag = None
        self._gram_kernel = None
        self._gram_lock = threading.Lock()

    @property
    def M(self) -> int:
        return self.coords.M

    @property
    def N(self) -> int:
        return self.grid.N

    @property
    def shape(self) -> tuple[int, int]:
        return (self.M, self.N)

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.complex128).ravel()
        if x.size != self.N:
            raise ValueError(f"expected an image of {self.N} pixels, got {x.size}")
        g = np.zeros((self.nfy, self.nfx), dtype=np.complex128)
        _embed(g, x.reshape(self.grid.shape) * self._deconv)
        G = sfft.fft2(g, overwrite_x=True)
        return _kernels.interp(G, self._ux, self._uy, self.width, self.kernel_beta)

    def apply_adjoint(self, y: np.ndarray) -> np.ndarray:
        y = np.ascontiguousarray(y, dtype=np.complex128).ravel()
        if y.size != self.M:
            raise ValueError(f"expected {self.M} samples, got {y.size}")
        H = _kernels.spread(y, self._ux, self._uy, self.nfy, self.nfx,
                            self.width, self.kernel_beta)
        h = sfft.ifft2(H, norm="forward", overwrite_x=True)
        return (_extract(h, self.grid.shape) * self._deconv).ravel()

    def gram_apply(self, x: np.ndarray) -> np.ndarray:
        """``F* F x`` by Toeplitz embedding.

        ``F* F`` only depends on pixel offsets, so it is a convolution whose
        kernel is the adjoint of all-ones data on a grid of twice the size.
        After a one-off kernel computation every application costs two FFTs
        on the doubled grid and no spreading or interpolation.
        """
        x = np.asarray(x, dtype=np.complex128).ravel()
        if x.size != self.N:
            raise ValueError(f"expected an image of {self.N} pixels, got {x.size}")
        K = self._toeplitz_kernel()
        ny, nx = self.grid.shape
        pad = np.zeros(K.shape, dtype=np.complex128)
        pad[:ny, :nx] = x.reshape(ny, nx)
        out = sfft.ifft2(sfft.fft2(pad, overwrite_x=True) * K, overwrite_x=True)
        return np.ascontiguousarray(out[:ny, :nx]).ravel()

    def _toeplitz_kernel(self) -> np.ndarray:
        with self._gram_lock:
            if self._gram_kernel is None:
                g = self.grid
                big = SceneGrid(2 * g.nx, 2 * g.ny, 2 * g.extent)
                op = NUFFTOperator(big, self.coords, self.oversamp, self.width)
                t = op.apply_adjoint(np.ones(self.M)).reshape(big.shape)
                # big-grid pixel (q, p) sits at offset (q - ny, p - nx); move offset 0 to index 0
                self._gram_kernel = sfft.fft2(np.fft.ifftshift(t))
        return self._gram_kernel

    def gram_diag(self) -> float:
        """Centre value of ``F* F`` applied to a unit impulse at the scene centre."""
        if self._gram_diag is None:
            e = np.zeros(self.N, dtype=np.complex128)
            e[self.grid.center_index] = 1.0
            self._gram_diag = float(self.apply_adjoint(self.apply(e))[self.grid.center_index].real)
        return self._gram_diag

    @property
    def ml_scale(self) -> float:
        return 1.0 / self.M


class MatrixOperator:
    """Dense matrix with the same interface as :class:`NUFFTOperator`."""

    def __init__(self, A: np.ndarray, grid: SceneGrid | None = None):
        A = np.asarray(A, dtype=np.complex128)
        if A.ndim != 2:
            raise ValueError("operator matrix must be 2-D")
        if grid is None:
            grid = SceneGrid(A.shape[1], 1, 1.0)
        if grid.N != A.shape[1]:
            raise ValueError("matrix column count does not match the grid")
        self.A = A
        self.grid = grid

    @property
    def M(self) -> int:
        return self.A.shape[0]

    @property
    def N(self) -> int:
        return self.A.shape[1]

    @property
    def shape(self):
        return self.A.shape

    def apply(self, x):
        return self.A @ np.asarray(x, dtype=np.complex128).ravel()

    def apply_adjoint(self, y):
        return self.A.conj().T @ np.asarray(y, dtype=np.complex128).ravel()

    def gram_apply(self, x):
        return self.apply_adjoint(self.apply(x))

    def gram_diag(self) -> float:
        c = self.grid.center_index
        return float(np.vdot(self.A[:, c], self.A[:, c]).real)

    @property
    def ml_scale(self) -> float:
        return 1.0 / self.gram_diag()


def _check_image(op, img) -> np.ndarray:
    if isinstance(img, ComplexImage):
        if img.grid != op.grid:
            raise ValueError("image grid does not match operator grid")
        return img.values
    return np.asarray(img, dtype=np.complex128).ravel()


def forward(op: NUFFTOperator, img) -> np.ndarray:
    return op.apply(_check_image(op, img))


def adjoint(op: NUFFTOperator, samples) -> ComplexImage:
    return ComplexImage(op.grid, op.apply_adjoint(samples))


def ml_estimate(op: NUFFTOperator, data) -> ComplexImage:
    """Matched-filter image ``F* data / M``; a unit point target maps to a unit peak."""
    return ComplexImage(op.grid, op.apply_adjoint(data) * op.ml_scale)


def _phase_args(grid: SceneGrid, coords: FreqCoords):
    M, N = coords.M, grid.N
    if M * N > DIRECT_DFT_LIMIT:
        raise ValueError(f"direct DFT of size {M}x{N} exceeds the {DIRECT_DFT_LIMIT:.0e} guard")
    x, y = grid.coords()
    return x, y


def dense_matrix(grid: SceneGrid, coords: FreqCoords) -> np.ndarray:
    x, y = _phase_args(grid, coords)
    return np.exp(-1j * (np.outer(coords.kx, x) + np.outer(coords.ky, y)))


def _axis_phases(grid: SceneGrid, coords: FreqCoords):
    _phase_args(grid, coords)
    # exp(-i (kx x + ky y)) factors into per-axis terms, so only M (nx + ny) exponentials
    return np.exp(-1j * np.outer(coords.kx, grid.x())), np.exp(-1j * np.outer(coords.ky, grid.y()))


def direct_dft(grid: SceneGrid, coords: FreqCoords, img) -> np.ndarray:
    """Exact O(MN) evaluation of the forward sum (test oracle)."""
    f = img.values if isinstance(img, ComplexImage) else np.asarray(img, dtype=np.complex128).ravel()
    if f.size != grid.N:
        raise ValueError("image size does not match grid")
    ex, ey = _axis_phases(grid, coords)
    return np.einsum("mj,mj->m", ey @ f.reshape(grid.shape), ex)


def direct_dft_adjoint(grid: SceneGrid, coords: FreqCoords, samples) -> ComplexImage:
    c = np.asarray(samples, dtype=np.complex128).ravel()
    if c.size != coords.M:
        raise ValueError("sample count does not match coordinates")
    ex, ey = _axis_phases(grid, coords)
    return ComplexImage(grid, (ey.conj().T @ (c[:, None] * ex.conj())).ravel())


class ScaledOperator:
    """``scale * F`` for an existing operator (used to normalise data fits)."""

    def __init__(self, op, scale: float):
        self.op = op
        self.scale = float(scale)
        self.grid = op.grid

    @property
    def M(self):
        return self.op.M

    @property
    def N(self):
        return self.op.N

    def apply(self, x):
        return self.scale * self.op.apply(x)

    def apply_adjoint(self, y):
        return self.scale * self.op.apply_adjoint(y)

    def gram_apply(self, x):
        return self.scale ** 2 * self.op.gram_apply(x)

    def gram_diag(self) -> float:
        return self.scale ** 2 * self.op.gram_diag()

    @property
    def ml_scale(self) -> float:
        return self.op.ml_scale / self.scale ** 2


def unit_normalized(op, data):
    """Operator and data both divided by ``sqrt(M)`` so that ``diag(F*F) ~ 1``."""
    s = 1.0 / np.sqrt(op.M)
    return ScaledOperator(op, s), np.asarray(data) * s
