"""Scene grids, phase history containers and sub-aperture planning."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class SceneGrid:
    """Uniform Cartesian pixel grid over ``[-extent, extent]^2``.

    Pixel ``(iy, ix)`` sits at ``x = (ix - nx // 2) * dx``, ``y = (iy - ny // 2) * dy``
    so the scene centre is always a pixel centre. Images are stored
    row-major with shape ``(ny, nx)``.
    """

    nx: int
    ny: int
    extent: float

    def __post_init__(self):
        if int(self.nx) < 1 or int(self.ny) < 1:
            raise ValueError(f"grid size must be positive, got {self.nx}x{self.ny}")
        if not (self.extent > 0 and math.isfinite(self.extent)):
            raise ValueError(f"extent must be positive and finite, got {self.extent}")
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))
        object.__setattr__(self, "extent", float(self.extent))

    @property
    def N(self) -> int:
        return self.nx * self.ny

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def dx(self) -> float:
        return 2.0 * self.extent / self.nx

    @property
    def dy(self) -> float:
        return 2.0 * self.extent / self.ny

    @property
    def center_index(self) -> int:
        return (self.ny // 2) * self.nx + self.nx // 2

    def x(self) -> np.ndarray:
        return (np.arange(self.nx) - self.nx // 2) * self.dx

    def y(self) -> np.ndarray:
        return (np.arange(self.ny) - self.ny // 2) * self.dy

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Flattened (x, y) pixel centres in storage order."""
        xx, yy = np.meshgrid(self.x(), self.y())
        return xx.ravel(), yy.ravel()

    def to_dict(self) -> dict:
        return {"nx": self.nx, "ny": self.ny, "extent": self.extent}


@dataclass(frozen=True)
class ComplexImage:
    grid: SceneGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.values, dtype=np.complex128).ravel())
        if v.size != self.grid.N:
            raise ValueError(f"image has {v.size} values, grid expects {self.grid.N}")
        if not np.all(np.isfinite(v)):
            raise ValueError("image contains non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def as_array(self) -> np.ndarray:
        return self.values.reshape(self.grid.shape)

    @classmethod
    def zeros(cls, grid: SceneGrid) -> "ComplexImage":
        return cls(grid, np.zeros(grid.N, dtype=np.complex128))


@dataclass(frozen=True)
class PhaseHistory:
    """Deramped phase-history samples.

    ``azimuths`` has shape (P,) in radians, ``k`` and ``samples`` have shape
    (P, K). ``chirp`` optionally records the chirp parameters the spatial
    frequencies were derived from.
    """

    azimuths: np.ndarray
    k: np.ndarray
    samples: np.ndarray
    chirp: dict | None = None

    def __post_init__(self):
        az = np.asarray(self.azimuths, dtype=np.float64).ravel()
        samples = np.asarray(self.samples, dtype=np.complex128)
        if samples.ndim != 2:
            raise ValueError("samples must be a (pulses, samples_per_pulse) array")
        P, K = samples.shape
        k = np.asarray(self.k, dtype=np.float64)
        if k.ndim == 1:
            k = np.broadcast_to(k, (P, k.size))
        if az.size != P or k.shape != (P, K):
            raise ValueError(
                f"inconsistent phase history: {az.size} azimuths, k {k.shape}, samples {samples.shape}")
        if P == 0 or K == 0:
            raise ValueError("phase history is empty")
        if not (np.all(np.isfinite(k)) and np.all(k > 0)):
            raise ValueError("spatial frequencies must be finite and positive")
        if not np.all(np.isfinite(az)):
            raise ValueError("azimuths must be finite")
        az = np.mod(az, TWO_PI)
        if np.any(np.diff(az) < 0):
            raise ValueError("azimuths must be sorted nondecreasing modulo 2*pi")
        for name, arr in (("azimuths", az), ("k", np.ascontiguousarray(k)),
                          ("samples", np.ascontiguousarray(samples))):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_pulses(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    def window_data(self, window: "Window") -> np.ndarray:
        self._check_indices(window.indices)
        return self.samples[window.indices].ravel()

    def _check_indices(self, idx):
        idx = np.asarray(idx)
        if idx.size and (idx.min() < 0 or idx.max() >= self.n_pulses):
            raise IndexError(f"pulse index out of range for {self.n_pulses} pulses")

    def with_samples(self, samples: np.ndarray) -> "PhaseHistory":
        return PhaseHistory(self.azimuths, self.k, samples, self.chirp)


@dataclass(frozen=True)
class Window:
    index: int
    center: float      # radians
    start: float       # radians, interval is [start, start + span)
    span: float        # radians
    indices: np.ndarray

    @property
    def half_span(self) -> float:
        return 0.5 * self.span

    def contains(self, theta) -> np.ndarray:
        return np.mod(np.asarray(theta) - self.start, TWO_PI) < self.span

    def intersects(self, a: float, b: float) -> bool:
        """Whether ``[a, b)`` (modular, radians) overlaps this window."""
        length = np.mod(b - a, TWO_PI) or TWO_PI
        # either interval start lies inside the other one
        return bool(np.mod(a - self.start, TWO_PI) < self.span
                    or np.mod(self.start - a, TWO_PI) < length)


@dataclass(frozen=True)
class AperturePlan:
    windows: tuple
    span_deg: float
    overlap_deg: float
    uncovered: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @property
    def L(self) -> int:
        return len(self.windows)

    def __len__(self):
        return len(self.windows)

    def __iter__(self):
        return iter(self.windows)

    def __getitem__(self, i):
        return self.windows[i]


@dataclass(frozen=True)
class FreqCoords:
    kx: np.ndarray
    ky: np.ndarray

    def __post_init__(self):
        kx = np.ascontiguousarray(self.kx, dtype=np.float64).ravel()
        ky = np.ascontiguousarray(self.ky, dtype=np.float64).ravel()
        if kx.shape != ky.shape:
            raise ValueError("kx and ky differ in length")
        if not (np.all(np.isfinite(kx)) and np.all(np.isfinite(ky))):
            raise ValueError("frequency coordinates must be finite")
        object.__setattr__(self, "kx", kx)
        object.__setattr__(self, "ky", ky)

    @property
    def M(self) -> int:
        return self.kx.size


_ANG_TOL = 1e-12


def _coverage(az: np.ndarray) -> tuple[float, float]:
    """Start angle and angular extent (radians) of sorted azimuths.

    Returns an extent of ``2*pi`` when no gap is noticeably larger than
    the typical pulse spacing.
    """
    if az.size == 1:
        return float(az[0]), 0.0
    gaps = np.diff(np.concatenate([az, az[:1] + TWO_PI]))
    i = int(np.argmax(gaps))
    spacing = float(np.median(gaps))
    if gaps[i] <= 1.5 * spacing + _ANG_TOL:
        return float(az[0]), TWO_PI
    start = float(az[(i + 1) % az.size])
    return start, float(TWO_PI - gaps[i])


def plan_subapertures(azimuths, span_deg: float, overlap_deg: float) -> AperturePlan:
    """Group pulses into overlapping azimuth windows.

    Windows are half-open intervals ``[start, start + span)`` advancing by
    ``span - overlap`` degrees from the first measured azimuth. With full
    360 degree coverage the windows wrap around; with partial coverage the
    last window is truncated to (and closed at) the final pulse. Pulses not
    captured by any window are listed in ``AperturePlan.uncovered``.
    """
    az = np.mod(np.asarray(azimuths, dtype=np.float64).ravel(), TWO_PI)
    if az.size == 0:
        raise ValueError("azimuth list is empty")
    if not (0 < span_deg <= 360):
        raise ValueError(f"span must lie in (0, 360], got {span_deg}")
    if not (0 <= overlap_deg < span_deg):
        raise ValueError(f"overlap must lie in [0, span), got {overlap_deg}")
    if np.any(np.diff(az) < 0):
        raise ValueError("azimuths must be sorted nondecreasing")

    start0, coverage = _coverage(az)
    full = coverage >= TWO_PI
    span = np.deg2rad(span_deg)
    step_deg = span_deg - overlap_deg
    step = np.deg2rad(step_deg)
    cov_deg = 360.0 if full else np.rad2deg(coverage)
    # rounding keeps 360/30 from becoming 12.000000001 -> 13
    L = max(1, int(math.ceil(round(cov_deg / step_deg, 9))))

    offset = np.mod(az - start0, TWO_PI)
    offset[offset > TWO_PI - _ANG_TOL] = 0.0

    windows = []
    covered = np.zeros(az.size, dtype=bool)
    for l in range(L):
        lo = l * step
        if full:
            rel = np.mod(offset - lo, TWO_PI)
            rel[rel > TWO_PI - _ANG_TOL] = 0.0
            mask = rel < span - _ANG_TOL
            width = span
        else:
            rel = offset - lo
            mask = (rel >= -_ANG_TOL) & (rel < span - _ANG_TOL)
            width = min(span, coverage - lo)
            if l == L - 1:
                mask |= (rel >= -_ANG_TOL) & (offset <= coverage + _ANG_TOL)
        idx = np.nonzero(mask)[0]
        if idx.size == 0:
            raise ValueError(f"window {l} starting at {np.rad2deg(start0 + lo):.4f} deg captures no pulses")
        idx = idx[np.argsort(rel[idx], kind="stable")]
        covered[idx] = True
        windows.append(Window(index=l, center=float(np.mod(start0 + lo + 0.5 * width, TWO_PI)),
                              start=float(np.mod(start0 + lo, TWO_PI)), span=float(width),
                              indices=idx.astype(np.int64)))
    return AperturePlan(tuple(windows), float(span_deg), float(overlap_deg),
                        uncovered=np.nonzero(~covered)[0])


def compute_spatial_frequencies(t, omega: float, alpha_chirp: float, tau0: float,
                                c: float = 299792458.0) -> np.ndarray:
    """Spatial frequency of each deramped sample time."""
    if not c > 0:
        raise ValueError("propagation speed must be positive")
    t = np.asarray(t, dtype=np.float64)
    k = (2.0 / c) * (omega + 2.0 * alpha_chirp * (t - tau0))
    if not np.all(np.isfinite(k)):
        raise ValueError("non-finite spatial frequencies")
    return k


def freq_coords(window: Window, ph: PhaseHistory) -> FreqCoords:
    idx = np.asarray(window.indices)
    ph._check_indices(idx)
    theta = ph.azimuths[idx][:, None]
    k = ph.k[idx]
    return FreqCoords(k * np.cos(theta), k * np.sin(theta))
