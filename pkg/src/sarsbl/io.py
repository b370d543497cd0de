"""On-disk formats.

Every binary file is a small self-describing container::

    SARSBL <kind> <version>\\n
    <header byte length>\\n
    <JSON header>\\n
    <payload>

The payload is a sequence of little-endian arrays described by the
header's ``arrays`` list; complex values are interleaved ``(re, im)``
float64 pairs. Phase histories keep azimuths and spatial frequencies in the
header and hold only the pulse-major sample array in the payload.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .core import ComplexImage, PhaseHistory, SceneGrid
from .metrics import DB_FLOOR, to_db

FORMAT_VERSION = 1
MAGIC = b"SARSBL"
_DTYPES = {"complex128": np.dtype("<c16"), "float64": np.dtype("<f8"), "int64": np.dtype("<i8")}


class FormatError(Exception):
    """Malformed or truncated file."""


class VersionError(FormatError):
    pass


class DimensionError(Exception):
    """Files or configuration disagree on array sizes."""


def write_container(path, kind: str, header: dict, arrays: dict) -> None:
    header = dict(header)
    specs = []
    blobs = []
    for name, arr in arrays.items():
        arr = np.asarray(arr)
        dt = "complex128" if np.iscomplexobj(arr) else ("int64" if arr.dtype.kind in "iu" else "float64")
        data = np.ascontiguousarray(arr, dtype=_DTYPES[dt])
        specs.append({"name": name, "dtype": dt, "shape": list(data.shape)})
        blobs.append(data.tobytes())
    header["arrays"] = specs
    header["endianness"] = "little"
    text = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC + f" {kind} {FORMAT_VERSION}\n".encode())
        fh.write(f"{len(text)}\n".encode())
        fh.write(text + b"\n")
        for b in blobs:
            fh.write(b)


def read_container(path, kind: str | None = None) -> tuple[dict, dict]:
    raw = Path(path).read_bytes()
    nl = raw.find(b"\n")
    first = raw[:nl].split() if nl >= 0 else []
    if len(first) != 3 or first[0] != MAGIC:
        raise FormatError(f"{path}: not a SARSBL file (bad magic line)")
    file_kind = first[1].decode()
    try:
        version = int(first[2])
    except ValueError:
        raise FormatError(f"{path}: unreadable format version {first[2]!r}") from None
    if version != FORMAT_VERSION:
        raise VersionError(f"{path}: format version {version} is not supported "
                           f"(expected {FORMAT_VERSION})")
    if kind is not None and file_kind != kind:
        raise FormatError(f"{path}: expected a {kind!r} file, found {file_kind!r}")
    nl2 = raw.find(b"\n", nl + 1)
    try:
        hlen = int(raw[nl + 1:nl2])
    except ValueError:
        raise FormatError(f"{path}: unreadable header length") from None
    hstart = nl2 + 1
    if hstart + hlen + 1 > len(raw):
        raise FormatError(f"{path}: header truncated at byte offset {len(raw)}")
    try:
        header = json.loads(raw[hstart:hstart + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: malformed header ({exc})") from None
    if header.get("endianness", "little") != "little":
        raise FormatError(f"{path}: field 'endianness' must be 'little'")
    offset = hstart + hlen + 1
    arrays = {}
    for spec in header.get("arrays", []):
        try:
            dt = _DTYPES[spec["dtype"]]
            shape = tuple(int(s) for s in spec["shape"])
        except (KeyError, TypeError, ValueError):
            raise FormatError(f"{path}: malformed array description {spec!r}") from None
        nbytes = int(np.prod(shape, dtype=np.int64)) * dt.itemsize
        if offset + nbytes > len(raw):
            raise FormatError(
                f"{path}: payload truncated at byte offset {len(raw)} while reading "
                f"'{spec['name']}' (needs bytes {offset}..{offset + nbytes})")
        arrays[spec["name"]] = np.frombuffer(raw, dtype=dt, count=nbytes // dt.itemsize,
                                             offset=offset).reshape(shape).copy()
        offset += nbytes
    if offset != len(raw):
        raise FormatError(f"{path}: {len(raw) - offset} unexpected trailing bytes after "
                          f"byte offset {offset}")
    return header, arrays


# -- phase history -----------------------------------------------------------

def write_phase_history(path, ph: PhaseHistory) -> None:
    k = ph.k
    shared = bool(np.all(k == k[:1]))
    header = {
        "pulses": ph.n_pulses,
        "samples": ph.n_samples,
        "azimuths": ph.azimuths.tolist(),
        "k": k[0].tolist() if shared else k.tolist(),
        "k_shared": shared,
        "chirp": ph.chirp,
    }
    write_container(path, "phase-history", header, {"samples": ph.samples})


def read_phase_history(path) -> PhaseHistory:
    header, arrays = read_container(path, "phase-history")
    for key in ("pulses", "samples", "azimuths", "k"):
        if key not in header:
            raise FormatError(f"{path}: header field '{key}' is missing")
    P, K = int(header["pulses"]), int(header["samples"])
    if "samples" not in arrays:
        raise FormatError(f"{path}: payload field 'samples' is missing")
    samples = arrays["samples"]
    if samples.shape != (P, K):
        raise DimensionError(f"{path}: field 'samples' has shape {samples.shape}, header says {(P, K)}")
    az = np.asarray(header["azimuths"], dtype=np.float64)
    if az.size != P:
        raise DimensionError(f"{path}: field 'azimuths' has {az.size} entries for {P} pulses")
    k = np.asarray(header["k"], dtype=np.float64)
    expect = (K,) if header.get("k_shared") else (P, K)
    if k.shape != expect:
        raise DimensionError(f"{path}: field 'k' has shape {k.shape}, expected {expect}")
    try:
        return PhaseHistory(az, k, samples, header.get("chirp"))
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None


# -- images and posteriors ---------------------------------------------------

def _grid_from(header, path) -> SceneGrid:
    try:
        g = header["grid"]
        return SceneGrid(int(g["nx"]), int(g["ny"]), float(g["extent"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: header field 'grid' is invalid ({exc})") from None


def write_image(path, grid: SceneGrid, values, meta: dict | None = None) -> None:
    values = np.asarray(values)
    if values.size != grid.N:
        raise DimensionError(f"image has {values.size} values for a {grid.nx}x{grid.ny} grid")
    write_container(path, "image", {"grid": grid.to_dict(), "meta": meta or {}},
                    {"values": values.reshape(grid.shape)})


def read_image(path) -> tuple[SceneGrid, np.ndarray, dict]:
    header, arrays = read_container(path, "image")
    grid = _grid_from(header, path)
    values = arrays.get("values")
    if values is None:
        raise FormatError(f"{path}: payload field 'values' is missing")
    if values.shape != grid.shape:
        raise DimensionError(f"{path}: field 'values' has shape {values.shape}, grid is {grid.shape}")
    return grid, values, header.get("meta", {})


def write_posterior(path, post, method: str = "bcd", cov_diag=None) -> None:
    """Store a window result; ``post`` is a posterior or, for point-estimate
    methods, a plain :class:`ComplexImage`."""
    if isinstance(post, ComplexImage):
        header = {"grid": post.grid.to_dict(), "method": method, "window": None}
        arrays = {"mu": post.values}
    else:
        header = {
            "grid": post.grid.to_dict(), "method": method, "window": post.window,
            "beta": post.beta, "path": post.path, "regularizer": post.regularizer,
            "rho": post.rho, "iterations": post.iterations, "converged": post.converged,
            "degenerate": post.degenerate, "trace": post.trace,
        }
        arrays = {"mu": post.mu.values, "alpha": post.alpha, "theta": post.theta.diag,
                  "precision_diag": post.precision_diag}
        if cov_diag is not None:
            arrays["cov_diag"] = cov_diag
    write_container(path, "posterior", header, arrays)


def read_posterior(path):
    """Load a window result.

    Returns a :class:`~sarsbl.solver.SubAperturePosterior` for Bayesian
    results and a :class:`ComplexImage` for point estimates.
    """
    from .regularizers import PhaseMatrix
    from .solver import SubAperturePosterior

    header, arrays = read_container(path, "posterior")
    grid = _grid_from(header, path)
    if "mu" not in arrays:
        raise FormatError(f"{path}: payload field 'mu' is missing")
    mu = arrays["mu"]
    if mu.size != grid.N:
        raise DimensionError(f"{path}: field 'mu' has {mu.size} values for {grid.N} pixels")
    img = ComplexImage(grid, mu)
    if header.get("method") != "bcd":
        return img
    for key in ("alpha", "theta", "precision_diag"):
        if key not in arrays:
            raise FormatError(f"{path}: payload field '{key}' is missing")
    if arrays["theta"].size != grid.N or arrays["precision_diag"].size != grid.N:
        raise DimensionError(f"{path}: fields 'theta'/'precision_diag' do not match the grid")
    post = SubAperturePosterior(
        mu=img, alpha=arrays["alpha"], beta=float(header["beta"]),
        theta=PhaseMatrix(arrays["theta"]), precision_diag=arrays["precision_diag"],
        path=header["path"], regularizer=header["regularizer"], rho=float(header["rho"]),
        iterations=int(header["iterations"]), converged=bool(header["converged"]),
        degenerate=bool(header.get("degenerate", False)), trace=header.get("trace", []),
        window=header.get("window"))
    if "cov_diag" in arrays:
        post._cov_diag = arrays["cov_diag"]
    return post


# -- grayscale rendering -----------------------------------------------------

def db_to_gray(db) -> np.ndarray:
    """Linear map of ``[-100, 0]`` dB onto ``[0, 255]``."""
    db = np.clip(np.asarray(db, dtype=np.float64), DB_FLOOR, 0.0)
    return np.rint((db - DB_FLOOR) * 255.0 / -DB_FLOOR).astype(np.uint8)


def write_pgm(path, gray: np.ndarray) -> None:
    """Binary 8-bit PGM; the first array row is written at the bottom (y up)."""
    gray = np.asarray(gray, dtype=np.uint8)
    if gray.ndim != 2:
        raise ValueError("PGM images must be 2-D")
    h, w = gray.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(gray[::-1]).tobytes())


def read_pgm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    parts = raw.split(maxsplit=4)
    if len(parts) < 5 or parts[0] != b"P5" or parts[3] != b"255":
        raise FormatError(f"{path}: not an 8-bit binary PGM")
    w, h = int(parts[1]), int(parts[2])
    data = np.frombuffer(parts[4][: w * h], dtype=np.uint8)
    if data.size != w * h:
        raise FormatError(f"{path}: PGM payload truncated at byte offset {len(raw)}")
    return data.reshape(h, w)[::-1]


def write_db_image(path, img) -> None:
    """dB rendering of a complex or magnitude image; an all-zero image is black."""
    arr = img.as_array() if isinstance(img, ComplexImage) else np.asarray(img)
    if not np.any(arr):
        gray = np.zeros(arr.shape, dtype=np.uint8)
    else:
        gray = db_to_gray(to_db(arr))
    write_pgm(path, gray)
