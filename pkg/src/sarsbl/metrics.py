"""Image-quality and timing measurements."""
from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from .core import ComplexImage

DB_FLOOR = -100.0
# expected runtime ordering, fastest first
METHOD_ORDER = ("nufft", "bcd-eps0.1", "bcd-eps0.01", "l1")


def _magnitude(img) -> np.ndarray:
    if isinstance(img, ComplexImage):
        return np.abs(img.as_array())
    return np.abs(np.asarray(img))


def to_db(img, floor: float = DB_FLOOR) -> np.ndarray:
    """``20 log10(|f| / max|f|)`` clipped to ``[floor, 0]``."""
    mag = _magnitude(img)
    peak = mag.max() if mag.size else 0.0
    if not peak > 0:
        raise ValueError("cannot convert an all-zero image to dB")
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(mag / peak)
    return np.clip(db, floor, 0.0)


@dataclass(frozen=True)
class RegionSpec:
    x0: int
    y0: int
    w: int
    h: int

    def __post_init__(self):
        if self.w * self.h < 2 or self.w < 1 or self.h < 1:
            raise ValueError("region must contain at least two pixels")
        if self.x0 < 0 or self.y0 < 0:
            raise ValueError("region origin must be nonnegative")

    def slices(self, shape) -> tuple[slice, slice]:
        ny, nx = shape
        if self.x0 + self.w > nx or self.y0 + self.h > ny:
            raise ValueError(f"region {self} exceeds image of shape {shape}")
        return slice(self.y0, self.y0 + self.h), slice(self.x0, self.x0 + self.w)

    @classmethod
    def parse(cls, text: str) -> "RegionSpec":
        parts = [int(p) for p in text.replace(" ", "").split(",")]
        if len(parts) != 4:
            raise ValueError("region must be given as x0,y0,w,h")
        return cls(*parts)

    @classmethod
    def centered(cls, shape, w: int, h: int | None = None, offset=(0, 0)) -> "RegionSpec":
        h = w if h is None else h
        ny, nx = shape
        return cls(nx // 2 - w // 2 + offset[0], ny // 2 - h // 2 + offset[1], w, h)


def region_values(img, region: RegionSpec) -> np.ndarray:
    mag = _magnitude(img)
    if mag.ndim == 1:
        raise ValueError("region statistics need a 2-D image")
    return mag[region.slices(mag.shape)].ravel()


def region_variance(img, region: RegionSpec) -> float:
    """Unbiased sample variance of ``|f|`` over the region."""
    return float(np.var(region_values(img, region), ddof=1))


@dataclass(frozen=True)
class LogHistogram:
    counts: np.ndarray
    edges: np.ndarray
    underflow: int

    def mode_center(self) -> float:
        i = int(np.argmax(self.counts))
        return 0.5 * (self.edges[i] + self.edges[i + 1])

    def occupied(self) -> np.ndarray:
        return np.nonzero(self.counts)[0]


def log_histogram(img, bins: int = 100, range: tuple | None = None) -> LogHistogram:
    """Histogram of ``log10|f|``; exact zeros are counted in ``underflow``."""
    if bins < 2:
        raise ValueError("need at least two bins")
    mag = _magnitude(img).ravel()
    nz = mag > 0
    logs = np.log10(mag[nz])
    if range is None:
        if logs.size == 0:
            range = (0.0, 1.0)
        else:
            lo, hi = float(logs.min()), float(logs.max())
            if hi - lo < 1e-12:
                lo, hi = lo - 0.5, hi + 0.5
            range = (lo, hi)
    counts, edges = np.histogram(logs, bins=bins, range=range)
    return LogHistogram(counts, edges, int(np.count_nonzero(~nz)))


def background_mode(img, mask=None, bins: int = 200) -> float:
    """Centre of the most populated ``log10|f|`` bin, zeros mapped to the
    smallest positive double so fully suppressed pixels still register."""
    mag = _magnitude(img)
    if mask is not None:
        mag = mag[mask]
    mag = np.maximum(mag.ravel(), np.finfo(np.float64).tiny)
    return log_histogram(mag, bins).mode_center()


@dataclass
class TimedRun:
    method: str
    seconds: float
    workers: int = 1
    windows: int = 1


@contextmanager
def timed(method: str, runs: list, workers: int = 1, windows: int = 1):
    t0 = time.perf_counter()
    yield
    runs.append(TimedRun(method, time.perf_counter() - t0, workers, windows))


def timing_report(runs) -> dict:
    """Rows sorted by runtime plus whether the expected method ordering holds."""
    runs = list(runs)
    if not runs:
        raise ValueError("need at least one timed run")
    rows = sorted(({"method": r.method, "seconds": r.seconds, "workers": r.workers,
                    "windows": r.windows} for r in runs), key=lambda r: r["seconds"])
    by = {r.method: r.seconds for r in runs}
    present = [m for m in METHOD_ORDER if m in by]
    ordered = all(by[a] < by[b] for a, b in zip(present, present[1:]))
    return {"rows": rows, "expected_order": present, "ordering_holds": ordered}
