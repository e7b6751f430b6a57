"""Training label-map construction.

Pipeline: correct smooth intensity non-uniformity, fit a Gaussian mixture
to the intensities outside the brain, label each non-brain voxel with its
most probable component, and fuse those synthetic labels with the manual
brain labels. The mixture labels carry no anatomical meaning; they only
diversify synthesis.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, SchemaError
from .grid import LabelCategory, LabelInfo, LabelMap, Volume
from .maskops import BinaryMask

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GmmParams:
    means: np.ndarray
    variances: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        means = np.asarray(self.means, dtype=np.float64)
        variances = np.asarray(self.variances, dtype=np.float64)
        weights = np.asarray(self.weights, dtype=np.float64)
        if not (means.shape == variances.shape == weights.shape):
            raise ParameterError("GMM parameter arrays must have equal length")
        if np.any(variances <= 0):
            raise ParameterError("GMM variances must be positive")
        if abs(weights.sum() - 1.0) > 1e-9:
            raise ParameterError("GMM weights must sum to 1")
        for arr in (means, variances, weights):
            arr.flags.writeable = False
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "variances", variances)
        object.__setattr__(self, "weights", weights)

    @property
    def k(self) -> int:
        return len(self.means)


def _poly_design(coords: np.ndarray, degree: int) -> np.ndarray:
    """Monomial design matrix x^a y^b z^c with a+b+c <= degree.

    Coordinates are expected normalized to [-1, 1] for conditioning.
    """
    cols = []
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            for c in range(degree + 1 - a - b):
                cols.append(coords[0] ** a * coords[1] ** b * coords[2] ** c)
    return np.stack(cols, axis=1)


def correct_nonuniformity(vol: Volume, degree: int = 3) -> Volume:
    """Remove a smooth multiplicative intensity field.

    A degree-`degree` polynomial is least-squares fit to the log-intensities
    over the positive support and divided out; the mean intensity over the
    support is preserved by rescaling. An all-nonpositive image is returned
    unchanged with a warning.
    """
    if degree < 0:
        raise ParameterError("degree must be >= 0")
    data = vol.data.astype(np.float64)
    support = data > 0
    if not support.any():
        log.warning("non-uniformity correction skipped: no positive voxels")
        return vol
    dims = np.asarray(vol.grid.dims, dtype=np.float64)
    idx = np.argwhere(support).T.astype(np.float64)
    denom = np.maximum(dims - 1.0, 1.0)
    norm_coords = 2.0 * idx / denom[:, None] - 1.0
    design = _poly_design(norm_coords, degree)
    logs = np.log(data[support])
    coef, *_ = np.linalg.lstsq(design, logs, rcond=None)
    field = design @ coef

    corrected = data.copy()
    corrected[support] = data[support] / np.exp(field)
    scale = data[support].mean() / corrected[support].mean()
    corrected[support] *= scale
    return Volume(vol.grid, corrected.astype(np.float32))


def _kmeanspp_init(samples: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centers = np.empty(k)
    centers[0] = samples[rng.integers(len(samples))]
    d2 = (samples - centers[0]) ** 2
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers[j] = samples[rng.integers(len(samples))]
        else:
            centers[j] = samples[rng.choice(len(samples), p=d2 / total)]
        d2 = np.minimum(d2, (samples - centers[j]) ** 2)
    return centers


def fit_gmm(samples, k: int, seed: int = 0, max_iter: int = 100,
            tol: float = 1e-6, return_trace: bool = False):
    """Fit a 1D Gaussian mixture by EM from a k-means++ start.

    Stops when the relative log-likelihood improvement drops below ``tol``
    or after ``max_iter`` iterations. Deterministic given ``seed``.
    """
    samples = np.asarray(samples, dtype=np.float64).ravel()
    if k < 1:
        raise ParameterError("k must be >= 1")
    if len(np.unique(samples)) < k:
        raise ParameterError(f"need at least {k} distinct samples to fit {k} components")

    rng = np.random.default_rng(seed)
    n = len(samples)
    means = _kmeanspp_init(samples, k, rng)
    var0 = samples.var()
    var_floor = max(var0, 1.0) * 1e-10
    variances = np.full(k, max(var0, var_floor))
    weights = np.full(k, 1.0 / k)

    trace = []
    prev_ll = -np.inf
    for _ in range(max_iter):
        log_resp = _log_gaussian(samples, means, variances) + np.log(weights)[:, None]
        log_norm = _logsumexp(log_resp)
        ll = float(log_norm.mean())
        trace.append(ll)
        resp = np.exp(log_resp - log_norm[None, :])

        counts = resp.sum(axis=1)
        counts = np.maximum(counts, 1e-300)
        weights = counts / n
        means = (resp @ samples) / counts
        variances = (resp @ samples**2) / counts - means**2
        variances = np.maximum(variances, var_floor)

        if prev_ll > -np.inf and abs(ll - prev_ll) < tol * max(abs(prev_ll), 1.0):
            break
        prev_ll = ll

    params = GmmParams(means, variances, weights / weights.sum())
    if return_trace:
        return params, trace
    return params


def _log_gaussian(x, means, variances):
    # (k, n) log N(x; mu_j, var_j)
    diff = x[None, :] - means[:, None]
    return -0.5 * (np.log(2.0 * np.pi * variances)[:, None] + diff**2 / variances[:, None])


def _logsumexp(a):
    top = a.max(axis=0)
    return top + np.log(np.exp(a - top[None, :]).sum(axis=0))


def posterior_components(values: np.ndarray, gmm: GmmParams) -> np.ndarray:
    """argmax-posterior component per value; ties go to the lowest index."""
    log_post = _log_gaussian(values, gmm.means, gmm.variances) + np.log(gmm.weights)[:, None]
    return np.argmax(log_post, axis=0)


def classify_nonbrain(vol: Volume, brain_mask: BinaryMask, gmm: GmmParams,
                      base_label: int) -> LabelMap:
    """Label every voxel outside the brain mask with its mixture component.

    Voxels inside the brain mask stay 0. Component ``c`` maps to label
    ``base_label + c``.
    """
    outside = ~brain_mask.data
    comp = posterior_components(vol.data[outside].astype(np.float64), gmm)
    data = np.zeros(vol.grid.dims, dtype=np.int32)
    data[outside] = base_label + comp
    schema: dict[int, LabelInfo] = {
        0: LabelInfo("background", LabelCategory.BACKGROUND)
    }
    for c in range(gmm.k):
        schema[base_label + c] = LabelInfo(f"gmm_{c}", LabelCategory.NONBRAIN_SYNTHETIC)
    return LabelMap(vol.grid, data, schema)


def fuse_labels(manual: LabelMap, gmm_labels: LabelMap,
                brain_boundary: BinaryMask) -> LabelMap:
    """Manual labels inside the brain boundary, mixture labels outside."""
    if manual.grid.dims != gmm_labels.grid.dims:
        raise ParameterError("label maps must share a grid")
    overlap = (set(manual.schema) & set(gmm_labels.schema)) - {0}
    if overlap:
        raise SchemaError(f"label id ranges overlap: {sorted(overlap)}")
    data = np.where(brain_boundary.data, manual.data, gmm_labels.data)
    schema = {0: LabelInfo("background", LabelCategory.BACKGROUND)}
    schema.update({k: v for k, v in manual.schema.items() if k != 0})
    schema.update({k: v for k, v in gmm_labels.schema.items() if k != 0})
    return LabelMap(manual.grid, data, schema)


def build_training_labels(image: Volume, manual: LabelMap, k: int = 6,
                          degree: int = 3, seed: int = 0) -> LabelMap:
    """Full preparation chain for one subject.

    The brain boundary is taken as the support of the manual labels; the
    mixture is fit to corrected intensities outside it.
    """
    corrected = correct_nonuniformity(image, degree)
    brain = BinaryMask(manual.grid, manual.data > 0)
    samples = corrected.data[~brain.data].astype(np.float64)
    gmm = fit_gmm(samples, k, seed)
    base = int(manual.data.max(initial=0)) + 1
    gmm_labels = classify_nonbrain(corrected, brain, gmm, base)
    return fuse_labels(manual, gmm_labels, brain)
