"""Synthetic scenes and phase histories with known ground truth.

Background reflectivity is fully developed speckle: real and imaginary
parts i.i.d. ``N(0, 1/alpha_bg)``, matching the prior density
``exp(-alpha |f|^2 / 2)``. Point scatterers can be restricted to an azimuth
interval to mimic anisotropic returns. Noise is circular complex Gaussian
with total variance ``1/beta_true``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import TWO_PI, ComplexImage, FreqCoords, PhaseHistory, SceneGrid, Window
from .nufft import NUFFTOperator


@dataclass(frozen=True)
class Scatterer:
    ix: int
    iy: int
    amplitude: complex = 1.0
    visible: tuple[float, float] | None = None  # radians, [start, end) modulo 2*pi

    def visible_at(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=np.float64)
        if self.visible is None:
            return np.ones(theta.shape, dtype=bool)
        a, b = self.visible
        length = np.mod(b - a, TWO_PI) or TWO_PI
        return np.mod(theta - a, TWO_PI) < length

    def visible_in(self, window: Window) -> bool:
        if self.visible is None:
            return True
        return window.intersects(*self.visible)


@dataclass(frozen=True)
class SceneSpec:
    grid: SceneGrid
    scatterers: tuple = ()
    alpha_bg: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "scatterers", tuple(self.scatterers))
        for s in self.scatterers:
            if not (0 <= s.ix < self.grid.nx and 0 <= s.iy < self.grid.ny):
                raise ValueError(f"scatterer at ({s.ix}, {s.iy}) lies outside the grid")
            if s.visible is not None and np.mod(s.visible[1] - s.visible[0], TWO_PI) == 0 \
                    and s.visible[0] == s.visible[1]:
                raise ValueError("empty scatterer visibility interval")
        if self.alpha_bg < 0:
            raise ValueError("alpha_bg must be nonnegative (0 disables the background)")

    @property
    def has_background(self) -> bool:
        return 0 < self.alpha_bg < np.inf


@dataclass(frozen=True)
class AcquisitionSpec:
    azimuths: np.ndarray
    k: np.ndarray
    beta_true: float = np.inf
    chirp: dict | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.beta_true > 0:
            raise ValueError("beta_true must be positive (inf for noiseless data)")


def background(spec: SceneSpec) -> np.ndarray:
    if not spec.has_background:
        return np.zeros(spec.grid.N, dtype=np.complex128)
    rng = np.random.default_rng([spec.seed, 0])
    sd = 1.0 / np.sqrt(spec.alpha_bg)
    return sd * (rng.standard_normal(spec.grid.N) + 1j * rng.standard_normal(spec.grid.N))


def _with_scatterers(spec: SceneSpec, bg: np.ndarray, keep) -> np.ndarray:
    f = bg.copy()
    for s, on in zip(spec.scatterers, keep):
        if on:
            f[s.iy * spec.grid.nx + s.ix] += s.amplitude
    return f


def make_scene(spec: SceneSpec, window: Window | None = None) -> ComplexImage:
    """Ground-truth reflectivity seen by ``window`` (all scatterers if ``None``).

    The speckle background depends only on the seed and is shared by all
    windows; a scatterer is included when its visibility interval meets the
    window.
    """
    keep = [True if window is None else s.visible_in(window) for s in spec.scatterers]
    return ComplexImage(spec.grid, _with_scatterers(spec, background(spec), keep))


def synthesize(spec: SceneSpec, acq: AcquisitionSpec, **nufft_kw) -> PhaseHistory:
    """Noisy phase history of the scene.

    Each pulse sees the scatterers visible at its own azimuth, so pulses
    shared by overlapping windows carry a single consistent measurement.
    """
    az = np.mod(np.asarray(acq.azimuths, dtype=np.float64), TWO_PI)
    P = az.size
    k = np.asarray(acq.k, dtype=np.float64)
    if k.ndim == 1:
        k = np.broadcast_to(k, (P, k.size))
    K = k.shape[1]
    vis = np.stack([s.visible_at(az) for s in spec.scatterers], axis=1) if spec.scatterers \
        else np.zeros((P, 0), dtype=bool)
    bg = background(spec)
    samples = np.empty((P, K), dtype=np.complex128)
    signatures, group = np.unique(vis, axis=0, return_inverse=True)
    group = np.asarray(group).ravel()
    for gi, sig in enumerate(signatures):
        rows = np.nonzero(group == gi)[0]
        coords = FreqCoords(k[rows] * np.cos(az[rows])[:, None], k[rows] * np.sin(az[rows])[:, None])
        op = NUFFTOperator(spec.grid, coords, **nufft_kw)
        samples[rows] = op.apply(_with_scatterers(spec, bg, sig)).reshape(rows.size, K)
    if np.isfinite(acq.beta_true):
        samples += noise((P, K), acq.beta_true, spec.seed)
    return PhaseHistory(az, k, samples, acq.chirp)


def noise(shape, beta_true: float, seed: int) -> np.ndarray:
    rng = np.random.default_rng([seed, 1])
    sd = np.sqrt(0.5 / beta_true)
    return sd * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def polar_acquisition(grid: SceneGrid, n_pulses: int, n_samples: int,
                      k_band=(0.5, 0.95), start_deg: float = 0.0, coverage_deg: float = 360.0,
                      beta_true: float = np.inf) -> AcquisitionSpec:
    """Evenly spaced pulses, each sampling an annulus of spatial frequencies.

    ``k_band`` is given as fractions of the grid's Nyquist frequency
    ``pi / max(dx, dy)``.
    """
    kmax = np.pi / max(grid.dx, grid.dy)
    k = np.linspace(k_band[0], k_band[1], n_samples) * kmax
    az = np.deg2rad(start_deg + coverage_deg * np.arange(n_pulses) / n_pulses)
    return AcquisitionSpec(np.mod(az, TWO_PI), k, beta_true)


def cartesian_acquisition(grid: SceneGrid, oversample: int = 2,
                          beta_true: float = np.inf) -> AcquisitionSpec:
    """Full-band, exactly orthogonal sampling written as a phase history.

    Frequencies sit on a half-cell-offset Cartesian lattice (so none is at
    the origin) with ``oversample`` points per DFT bin along each axis;
    ``F*F = M I`` holds exactly. Each lattice point is one single-sample
    pulse, sorted by azimuth.
    """
    nx, ny = oversample * grid.nx, oversample * grid.ny
    wx = 2 * np.pi * (np.arange(nx) - nx // 2 + 0.5) / nx
    wy = 2 * np.pi * (np.arange(ny) - ny // 2 + 0.5) / ny
    kx, ky = np.meshgrid(wx / grid.dx, wy / grid.dy)
    kx, ky = kx.ravel(), ky.ravel()
    az = np.mod(np.arctan2(ky, kx), TWO_PI)
    k = np.hypot(kx, ky)
    order = np.lexsort((k, az))
    return AcquisitionSpec(az[order], k[order][:, None], beta_true)
