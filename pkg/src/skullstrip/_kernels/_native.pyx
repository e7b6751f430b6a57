# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: direct-loop 3D convolution and linear-time exact EDT.

Convolutions parallelize over channels (outputs in the forward pass, inputs
in the backward pass), so every array element keeps a single writer and a
fixed accumulation order; results are bit-identical for any thread count.
"""

import numpy as np

cimport numpy as cnp
from cython.parallel import prange

NAME = "native"

# step sentinel for lines without features; squared value stays finite
cdef Py_ssize_t FAR = 1048576  # 1 << 20

ctypedef fused real:
    float
    double


def conv3d_forward(const real[:, :, :, ::1] x, const real[:, :, :, :, ::1] w, const real[::1] b):
    cdef Py_ssize_t ci = x.shape[0], nx = x.shape[1], ny = x.shape[2], nz = x.shape[3]
    cdef Py_ssize_t co = w.shape[0]
    if real is float:
        out_np = np.empty((co, nx, ny, nz), dtype=np.float32)
    else:
        out_np = np.empty((co, nx, ny, nz), dtype=np.float64)
    cdef real[:, :, :, ::1] out = out_np
    cdef Py_ssize_t c, i, ox, oy, oz, dx, dy, dz
    cdef Py_ssize_t x0, x1, y0, y1, z0, z1, sx, sy, sz
    cdef real wv, bv

    for c in prange(co, nogil=True):
        bv = b[c]
        for ox in range(nx):
            for oy in range(ny):
                for oz in range(nz):
                    out[c, ox, oy, oz] = bv
        for i in range(ci):
            for dx in range(3):
                sx = dx - 1
                x0 = -sx if sx < 0 else 0
                x1 = nx - sx if sx > 0 else nx
                for dy in range(3):
                    sy = dy - 1
                    y0 = -sy if sy < 0 else 0
                    y1 = ny - sy if sy > 0 else ny
                    for dz in range(3):
                        sz = dz - 1
                        z0 = -sz if sz < 0 else 0
                        z1 = nz - sz if sz > 0 else nz
                        wv = w[c, i, dx, dy, dz]
                        if wv == 0:
                            continue
                        for ox in range(x0, x1):
                            for oy in range(y0, y1):
                                for oz in range(z0, z1):
                                    out[c, ox, oy, oz] = out[c, ox, oy, oz] + wv * x[i, ox + sx, oy + sy, oz + sz]
    return out_np


def conv3d_backward(x, w, gy):
    """Gradients of conv3d_forward; grad_input reuses the forward kernel.

    Cross-correlating grad_out with the channel-transposed, spatially
    flipped weights is exactly the input gradient of zero-padded same-size
    correlation.
    """
    wt = np.ascontiguousarray(w.transpose(1, 0, 2, 3, 4)[:, :, ::-1, ::-1, ::-1])
    gx = conv3d_forward(gy, wt, np.zeros(x.shape[0], dtype=x.dtype))
    gw, gb = _conv3d_wgrad(x, gy)
    return gx, gw, gb


def _conv3d_wgrad(const real[:, :, :, ::1] x, const real[:, :, :, ::1] gy):
    cdef Py_ssize_t ci = x.shape[0], nx = x.shape[1], ny = x.shape[2], nz = x.shape[3]
    cdef Py_ssize_t co = gy.shape[0]
    if real is float:
        dtype = np.float32
    else:
        dtype = np.float64
    gw_np = np.zeros((co, ci, 3, 3, 3), dtype=dtype)
    gb_np = np.zeros(co, dtype=dtype)
    cdef real[:, :, :, :, ::1] gw = gw_np
    cdef real[::1] gb = gb_np
    cdef Py_ssize_t c, i, ox, oy, oz, dx, dy, dz
    cdef Py_ssize_t x0, x1, y0, y1, z0, z1, sx, sy, sz
    cdef real acc, s0, s1, s2, s3

    for c in prange(co, nogil=True):
        acc = 0
        for ox in range(nx):
            for oy in range(ny):
                for oz in range(nz):
                    acc = acc + gy[c, ox, oy, oz]
        gb[c] = acc

        # gw[c] has a single writer per thread; fixed 4-lane summation order
        for i in range(ci):
            for dx in range(3):
                sx = dx - 1
                x0 = -sx if sx < 0 else 0
                x1 = nx - sx if sx > 0 else nx
                for dy in range(3):
                    sy = dy - 1
                    y0 = -sy if sy < 0 else 0
                    y1 = ny - sy if sy > 0 else ny
                    for dz in range(3):
                        sz = dz - 1
                        z0 = -sz if sz < 0 else 0
                        z1 = nz - sz if sz > 0 else nz
                        acc = 0
                        for ox in range(x0, x1):
                            for oy in range(y0, y1):
                                s0 = 0
                                s1 = 0
                                s2 = 0
                                s3 = 0
                                oz = z0
                                while oz + 4 <= z1:
                                    s0 = s0 + gy[c, ox, oy, oz] * x[i, ox + sx, oy + sy, oz + sz]
                                    s1 = s1 + gy[c, ox, oy, oz + 1] * x[i, ox + sx, oy + sy, oz + 1 + sz]
                                    s2 = s2 + gy[c, ox, oy, oz + 2] * x[i, ox + sx, oy + sy, oz + 2 + sz]
                                    s3 = s3 + gy[c, ox, oy, oz + 3] * x[i, ox + sx, oy + sy, oz + 3 + sz]
                                    oz = oz + 4
                                while oz < z1:
                                    s0 = s0 + gy[c, ox, oy, oz] * x[i, ox + sx, oy + sy, oz + sz]
                                    oz = oz + 1
                                acc = acc + ((s0 + s1) + (s2 + s3))
                        gw[c, i, dx, dy, dz] = acc
    return gw_np, gb_np


def edt_squared(mask, voxel_size):
    """Exact squared Euclidean distance (mm^2) via per-line parabola envelopes."""
    m = np.ascontiguousarray(mask, dtype=np.uint8)
    cdef double w0 = voxel_size[0], w1 = voxel_size[1], w2 = voxel_size[2]
    cdef Py_ssize_t nx = m.shape[0], ny = m.shape[1], nz = m.shape[2]
    f_np = np.empty((nx, ny, nz), dtype=np.float64)
    cdef cnp.uint8_t[:, :, ::1] mv = m
    cdef double[:, :, ::1] f = f_np
    cdef Py_ssize_t i, j, k, n
    cdef double t
    cdef Py_ssize_t L = max(nx, max(ny, nz))

    buf_np = np.empty(L, dtype=np.float64)
    out_np = np.empty(L, dtype=np.float64)
    z_np = np.empty(L + 1, dtype=np.float64)
    v_np = np.empty(L, dtype=np.intp)
    cdef double[::1] buf = buf_np, out = out_np, z = z_np
    cdef Py_ssize_t[::1] v = v_np

    with nogil:
        # axis 2: running sweeps along contiguous lines
        for i in range(nx):
            for j in range(ny):
                n = FAR
                for k in range(nz):
                    n = 0 if mv[i, j, k] else n + 1
                    f[i, j, k] = n
                n = FAR
                for k in range(nz - 1, -1, -1):
                    n = 0 if mv[i, j, k] else n + 1
                    if n < f[i, j, k]:
                        f[i, j, k] = n
                for k in range(nz):
                    t = f[i, j, k] * w2
                    f[i, j, k] = t * t

        # axis 1
        for i in range(nx):
            for k in range(nz):
                for j in range(ny):
                    buf[j] = f[i, j, k]
                _parabola_line(&buf[0], &out[0], &z[0], &v[0], ny, w1)
                for j in range(ny):
                    f[i, j, k] = out[j]

        # axis 0
        for j in range(ny):
            for k in range(nz):
                for i in range(nx):
                    buf[i] = f[i, j, k]
                _parabola_line(&buf[0], &out[0], &z[0], &v[0], nx, w0)
                for i in range(nx):
                    f[i, j, k] = out[i]

    return f_np


cdef void _parabola_line(double* fin, double* fout, double* z, Py_ssize_t* v,
                         Py_ssize_t n, double w) noexcept nogil:
    """fout[i] = min_q fin[q] + ((i - q) * w)^2, lower envelope of parabolas.

    Intersections are tracked in index units; only the choice of minimizing
    parabola depends on them, so outputs stay exact for integer inputs.
    """
    cdef Py_ssize_t k = 0, q, i
    cdef double s, w2 = w * w
    v[0] = 0
    z[0] = -1e300
    z[1] = 1e300
    for q in range(1, n):
        s = (fin[q] - fin[v[k]] + w2 * <double>(q * q - v[k] * v[k])) / (2.0 * w2 * <double>(q - v[k]))
        while s <= z[k]:
            k -= 1
            s = (fin[q] - fin[v[k]] + w2 * <double>(q * q - v[k] * v[k])) / (2.0 * w2 * <double>(q - v[k]))
        k += 1
        v[k] = q
        z[k] = s
        z[k + 1] = 1e300
    k = 0
    for i in range(n):
        while z[k + 1] < i:
            k += 1
        fout[i] = fin[v[k]] + w2 * <double>((i - v[k]) * (i - v[k]))
