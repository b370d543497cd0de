"""Spreading/interpolation kernels for the gridding NUFFT.

Both a numba and a chunked numpy implementation are provided; ``interp`` and
``spread`` point at the one selected by ``SARSBL_DISABLE_NUMBA``. Coordinates
are given in oversampled-grid units, the kernel is the exponential of
semicircle ``exp(beta * (sqrt(1 - (2z/w)^2) - 1))`` on ``|z| <= w/2``.
"""
import numpy as np

from ._accel import HAS_NUMBA, USE_NUMBA

_CHUNK = 4096


def es_kernel(z, width, beta):
    z = np.asarray(z, dtype=np.float64)
    t = 1.0 - (2.0 * z / width) ** 2
    out = np.zeros_like(z)
    m = t >= 0
    out[m] = np.exp(beta * (np.sqrt(t[m]) - 1.0))
    return out


def es_kernel_ft(xi, width, beta, nodes=256):
    """Fourier transform of the ES kernel, by Gauss-Legendre quadrature."""
    x, wq = np.polynomial.legendre.leggauss(nodes)
    z = 0.5 * width * x
    wq = 0.5 * width * wq * es_kernel(z, width, beta)
    xi = np.asarray(xi, dtype=np.float64)
    return np.cos(np.multiply.outer(xi, z)) @ wq


def _weights_numpy(u, width, beta):
    start = np.ceil(u - 0.5 * width).astype(np.int64)
    idx = start[:, None] + np.arange(width)
    w = es_kernel(u[:, None] - idx, width, beta)
    return idx, w


def interp_numpy(G, ux, uy, width, beta):
    nfy, nfx = G.shape
    out = np.empty(ux.size, dtype=np.complex128)
    for s in range(0, ux.size, _CHUNK):
        sl = slice(s, s + _CHUNK)
        ix, wx = _weights_numpy(ux[sl], width, beta)
        iy, wy = _weights_numpy(uy[sl], width, beta)
        block = G[(iy % nfy)[:, :, None], (ix % nfx)[:, None, :]]
        out[sl] = np.einsum("cb,cba,ca->c", wy, block, wx)
    return out


def spread_numpy(c, ux, uy, nfy, nfx, width, beta):
    size = nfy * nfx
    re = np.zeros(size)
    im = np.zeros(size)
    for s in range(0, ux.size, _CHUNK):
        sl = slice(s, s + _CHUNK)
        ix, wx = _weights_numpy(ux[sl], width, beta)
        iy, wy = _weights_numpy(uy[sl], width, beta)
        flat = ((iy % nfy)[:, :, None] * nfx + (ix % nfx)[:, None, :]).ravel()
        vals = (c[sl, None, None] * wy[:, :, None] * wx[:, None, :]).ravel()
        re += np.bincount(flat, weights=vals.real, minlength=size)
        im += np.bincount(flat, weights=vals.imag, minlength=size)
    return (re + 1j * im).reshape(nfy, nfx)


if HAS_NUMBA:
    from numba import njit

    @njit(cache=True, nogil=True, fastmath=True)
    def _fill_weights(u, width, beta, w):
        start = np.int64(np.ceil(u - 0.5 * width))
        for a in range(width):
            z = 2.0 * (u - (start + a)) / width
            t = 1.0 - z * z
            w[a] = np.exp(beta * (np.sqrt(t) - 1.0)) if t >= 0.0 else 0.0
        return start

    # The fine grid is periodically extended by ``width`` samples on the high
    # side so each kernel footprint is a contiguous block.

    @njit(cache=True, nogil=True, fastmath=True)
    def interp_numba(G, ux, uy, width, beta):
        nfy, nfx = G.shape
        Gp = np.empty((nfy + width, nfx + width), dtype=np.complex128)
        for r in range(nfy + width):
            src = G[r % nfy]
            for c in range(nfx + width):
                Gp[r, c] = src[c % nfx]
        M = ux.size
        out = np.empty(M, dtype=np.complex128)
        wx = np.empty(width)
        wy = np.empty(width)
        for m in range(M):
            x0 = _fill_weights(ux[m], width, beta, wx) % nfx
            y0 = _fill_weights(uy[m], width, beta, wy) % nfy
            acc_r = 0.0
            acc_i = 0.0
            for b in range(width):
                row = Gp[y0 + b]
                s_r = 0.0
                s_i = 0.0
                for a in range(width):
                    v = row[x0 + a]
                    s_r += wx[a] * v.real
                    s_i += wx[a] * v.imag
                acc_r += wy[b] * s_r
                acc_i += wy[b] * s_i
            out[m] = complex(acc_r, acc_i)
        return out

    @njit(cache=True, nogil=True, fastmath=True)
    def spread_numba(c, ux, uy, nfy, nfx, width, beta):
        Gp_r = np.zeros((nfy + width, nfx + width))
        Gp_i = np.zeros((nfy + width, nfx + width))
        wx = np.empty(width)
        wy = np.empty(width)
        for m in range(ux.size):
            x0 = _fill_weights(ux[m], width, beta, wx) % nfx
            y0 = _fill_weights(uy[m], width, beta, wy) % nfy
            cr = c[m].real
            ci = c[m].imag
            for b in range(width):
                vr = cr * wy[b]
                vi = ci * wy[b]
                row_r = Gp_r[y0 + b]
                row_i = Gp_i[y0 + b]
                for a in range(width):
                    row_r[x0 + a] += vr * wx[a]
                    row_i[x0 + a] += vi * wx[a]
        G = np.zeros((nfy, nfx), dtype=np.complex128)
        for r in range(nfy + width):
            for col in range(nfx + width):
                G[r % nfy, col % nfx] += complex(Gp_r[r, col], Gp_i[r, col])
        return G
else:  # pragma: no cover
    interp_numba = None
    spread_numba = None


if USE_NUMBA:
    interp = interp_numba
    spread = spread_numba
else:
    interp = interp_numpy
    spread = spread_numpy

BACKEND = "numba" if USE_NUMBA else "numpy"
