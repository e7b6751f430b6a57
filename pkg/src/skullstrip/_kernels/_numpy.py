"""Pure-NumPy kernel implementations.

Fallback used when the compiled extension is unavailable. Convolutions run
as one small BLAS matmul per kernel tap over shifted views; the distance
transform minimizes over whole-axis offsets (exact, but O(n * axis) per
pass instead of the compiled core's O(n)).
"""

import numpy as np

NAME = "numpy"

# sentinel step count for "no feature seen yet" in the first EDT sweep;
# must exceed any axis length, and its squared distance must stay finite
_FAR = 1 << 20


def _padded(x):
    ci, nx, ny, nz = x.shape
    xp = np.zeros((ci, nx + 2, ny + 2, nz + 2), dtype=x.dtype)
    xp[:, 1:-1, 1:-1, 1:-1] = x
    return xp


def conv3d_forward(x, w, b):
    """3x3x3 cross-correlation with zero padding.

    x: (ci, X, Y, Z), w: (co, ci, 3, 3, 3), b: (co,) -> (co, X, Y, Z)
    """
    ci, nx, ny, nz = x.shape
    co = w.shape[0]
    n = nx * ny * nz
    xp = _padded(x)
    y = np.broadcast_to(b[:, None], (co, n)).copy()
    for dx in range(3):
        for dy in range(3):
            for dz in range(3):
                xs = xp[:, dx : dx + nx, dy : dy + ny, dz : dz + nz].reshape(ci, n)
                y += w[:, :, dx, dy, dz] @ xs
    return y.reshape(co, nx, ny, nz)


def conv3d_backward(x, w, gy):
    """Gradients of conv3d_forward w.r.t. input, kernel, and bias."""
    ci, nx, ny, nz = x.shape
    co = w.shape[0]
    n = nx * ny * nz
    xp = _padded(x)
    gy_flat = gy.reshape(co, n)
    gb = gy_flat.sum(axis=1)
    gw = np.empty_like(w)
    gxp = np.zeros_like(xp)
    for dx in range(3):
        for dy in range(3):
            for dz in range(3):
                sl = (slice(None), slice(dx, dx + nx), slice(dy, dy + ny),
                      slice(dz, dz + nz))
                xs = xp[sl].reshape(ci, n)
                gw[:, :, dx, dy, dz] = gy_flat @ xs.T
                gxp[sl] += (w[:, :, dx, dy, dz].T @ gy_flat).reshape(ci, nx, ny, nz)
    gx = gxp[:, 1:-1, 1:-1, 1:-1]
    return np.ascontiguousarray(gx), gw, gb


def edt_squared(mask, voxel_size):
    """Exact squared Euclidean distance (mm^2) to the nearest true voxel.

    Returns float64. The caller must guard the all-false case.
    """
    m = np.asarray(mask, dtype=bool)
    w0, w1, w2 = (float(s) for s in voxel_size)

    # axis 2: nearest feature within each line via two running sweeps
    steps = np.where(m, 0, _FAR).astype(np.int64)
    for k in range(1, m.shape[2]):
        np.minimum(steps[:, :, k], steps[:, :, k - 1] + 1, out=steps[:, :, k])
    for k in range(m.shape[2] - 2, -1, -1):
        np.minimum(steps[:, :, k], steps[:, :, k + 1] + 1, out=steps[:, :, k])
    f = (steps.astype(np.float64) * w2) ** 2

    f = _min_parabola_axis(f, w1, axis=1)
    f = _min_parabola_axis(f, w0, axis=0)
    return f


def _min_parabola_axis(f, w, axis):
    """g[i] = min_q f[q] + ((i - q) * w)^2 along one axis, by full scan."""
    length = f.shape[axis]
    fm = np.moveaxis(f, axis, 0)
    out = np.full_like(fm, np.inf)
    pos = np.arange(length, dtype=np.float64) * w
    tail_shape = (length,) + (1,) * (f.ndim - 1)
    for q in range(length):
        d2 = ((pos - pos[q]) ** 2).reshape(tail_shape)
        np.minimum(out, fm[q][None] + d2, out=out)
    return np.moveaxis(out, 0, axis)
