"""Independent brute-force reference implementations used by the tests.

Deliberately naive: every routine here is O(n^2)-ish and shares no code
with the package internals it checks.
"""

import numpy as np


def brute_edt_squared(mask, voxel_size=(1.0, 1.0, 1.0)):
    """Nearest-true-voxel squared distance by full pairwise scan."""
    mask = np.asarray(mask, dtype=bool)
    scale = np.asarray(voxel_size, dtype=np.float64)
    pts = np.argwhere(mask).astype(np.float64)
    out = np.empty(mask.shape, dtype=np.float64)
    for idx in np.ndindex(mask.shape):
        d = (pts - np.asarray(idx, dtype=np.float64)) * scale
        out[idx] = ((d * d).sum(axis=1)).min()
    return out


def brute_boundary(mask):
    """True voxels with a false 6-neighbor; outside the grid counts false."""
    mask = np.asarray(mask, dtype=bool)
    out = np.zeros_like(mask)
    for idx in np.argwhere(mask):
        i, j, k = idx
        for axis, step in ((0, -1), (0, 1), (1, -1), (1, 1), (2, -1), (2, 1)):
            nb = [i, j, k]
            nb[axis] += step
            if not (0 <= nb[axis] < mask.shape[axis]) or not mask[tuple(nb)]:
                out[i, j, k] = True
                break
    return out


def brute_hausdorff(a, b, percentile=100.0, voxel_size=(1.0, 1.0, 1.0)):
    """Max/percentile of directed boundary-to-boundary distances."""
    scale = np.asarray(voxel_size, dtype=np.float64)
    pa = np.argwhere(brute_boundary(a)).astype(np.float64) * scale
    pb = np.argwhere(brute_boundary(b)).astype(np.float64) * scale
    d2 = ((pa[:, None, :] - pb[None, :, :]) ** 2).sum(axis=2)
    d_ab = np.sqrt(d2.min(axis=1))
    d_ba = np.sqrt(d2.min(axis=0))
    if percentile >= 100.0:
        return float(max(d_ab.max(), d_ba.max()))
    return float(max(np.percentile(d_ab, percentile),
                     np.percentile(d_ba, percentile)))


def _min_l1_to_points(shape, pts):
    """L1 distance from every voxel of ``shape`` to its nearest point."""
    coords = np.indices(shape).reshape(3, -1).T
    out = np.empty(len(coords), dtype=np.int64)
    step = max(1, 4_000_000 // max(len(pts), 1))
    for i in range(0, len(coords), step):
        chunk = coords[i : i + step]
        d = np.abs(chunk[:, None, :] - pts[None, :, :]).sum(axis=2)
        out[i : i + len(chunk)] = d.min(axis=1)
    return out.reshape(shape)


def brute_dilate(mask, iters):
    """6-connectivity dilation == union of L1 balls of radius ``iters``."""
    mask = np.asarray(mask, dtype=bool)
    pts = np.argwhere(mask)
    if not len(pts):
        return np.zeros_like(mask)
    return _min_l1_to_points(mask.shape, pts) <= iters


def brute_erode(mask, iters):
    """Voxels whose whole L1 ball is foreground; outside the grid is background.

    A one-voxel background ring suffices: the nearest out-of-grid voxel is
    always one step beyond the nearest face.
    """
    mask = np.asarray(mask, dtype=bool)
    padded = np.pad(mask, 1)
    pts = np.argwhere(~padded)
    d = _min_l1_to_points(padded.shape, pts)
    return (d > iters)[1:-1, 1:-1, 1:-1] & mask


def conv3d_naive(x, w, b):
    """Direct six-loop 3x3x3 cross-correlation with zero padding."""
    ci, nx, ny, nz = x.shape
    co = w.shape[0]
    out = np.zeros((co, nx, ny, nz), dtype=np.float64)
    for c in range(co):
        for ox in range(nx):
            for oy in range(ny):
                for oz in range(nz):
                    acc = float(b[c])
                    for i in range(ci):
                        for dx in range(3):
                            for dy in range(3):
                                for dz in range(3):
                                    ix, iy, iz = ox + dx - 1, oy + dy - 1, oz + dz - 1
                                    if 0 <= ix < nx and 0 <= iy < ny and 0 <= iz < nz:
                                        acc += float(w[c, i, dx, dy, dz]) * float(x[i, ix, iy, iz])
                    out[c, ox, oy, oz] = acc
    return out


def random_mask(rng, max_dim=12, min_dim=3, fill=None, nonempty=True):
    dims = tuple(int(d) for d in rng.integers(min_dim, max_dim + 1, 3))
    p = fill if fill is not None else rng.uniform(0.05, 0.6)
    m = rng.random(dims) < p
    if nonempty and not m.any():
        m[tuple(rng.integers(0, d) for d in dims)] = True
    return m


def connected_components_6(mask):
    """Number of 6-connected components, by BFS."""
    mask = np.asarray(mask, dtype=bool)
    seen = np.zeros_like(mask)
    count = 0
    for start in np.argwhere(mask):
        if seen[tuple(start)]:
            continue
        count += 1
        stack = [tuple(start)]
        seen[tuple(start)] = True
        while stack:
            i, j, k = stack.pop()
            for axis, step in ((0, -1), (0, 1), (1, -1), (1, 1), (2, -1), (2, 1)):
                nb = [i, j, k]
                nb[axis] += step
                t = tuple(nb)
                if (0 <= nb[axis] < mask.shape[axis]) and mask[t] and not seen[t]:
                    seen[t] = True
                    stack.append(t)
    return count
