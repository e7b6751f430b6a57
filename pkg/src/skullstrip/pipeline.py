"""End-to-end experiment: phantoms -> training -> stripping -> evaluation.

Everything is derived from one PipelineConfig; the single seed drives
phantom generation, synthesis, weight initialization, and test-image
synthesis, so a rerun reproduces every output byte for byte.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .config import PipelineConfig, require
from .grid import LabelMap
from .manifest import ManifestEntry, write_manifest
from .maskops import derive_target_mask
from .metrics import evaluate_cohort
from .net import predict_mask, save_model, train
from .nifti import write_nifti
from .phantom import make_phantom_labelmap
from .synth import synthesize_sample

_TAG_PHANTOM = 11
_TAG_TEST = 12


def phantom_seed(seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), _TAG_PHANTOM, int(index)])


def test_image_seed(seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), _TAG_TEST, int(index)])


def generate_phantom_set(cfg: PipelineConfig, outdir: Path):
    """Write train/val/test phantom label maps plus a manifest."""
    outdir.mkdir(parents=True, exist_ok=True)
    counts = [("train", cfg.phantom.train), ("val", cfg.phantom.val),
              ("test", cfg.phantom.test)]
    maps: dict[str, list[LabelMap]] = {"train": [], "val": [], "test": []}
    entries = []
    index = 0
    for split, count in counts:
        for _ in range(count):
            lm = make_phantom_labelmap(phantom_seed(cfg.seed, index),
                                       dims=cfg.phantom.dims)
            name = f"phantom_{index:03d}.nii.gz"
            write_nifti(lm, outdir / name)
            entries.append(ManifestEntry(f"phantom_{index:03d}",
                                         outdir / name, None, split))
            maps[split].append(lm)
            index += 1
    write_manifest(entries, outdir / "manifest.csv")
    return maps


def run_pipeline(cfg: PipelineConfig, log_fn=None) -> dict[str, Path]:
    """Run the full chain; returns the paths of the produced artifacts."""
    workdir = Path(require(cfg, "paths.workdir"))
    workdir.mkdir(parents=True, exist_ok=True)
    if cfg.net.input_size != cfg.phantom.dims:
        raise ValueError(
            f"net.input_size ({cfg.net.input_size}) must equal phantom.dims "
            f"({cfg.phantom.dims}) for the pipeline"
        )

    maps = generate_phantom_set(cfg, workdir / "labels")

    result = train(cfg.net, maps["train"], cfg.synth, cfg.loss.kind,
                   maps["val"], cfg.seed, cfg.settings_with_loss(), log_fn=log_fn)
    model_path = workdir / "model.bin"
    save_model(model_path, cfg.net, result.params)

    pairs = []
    for i, lm in enumerate(maps["test"]):
        samp = synthesize_sample(lm, cfg.synth, test_image_seed(cfg.seed, i))
        gt = derive_target_mask(samp.warped_labels, cfg.train.close_iters)
        pred = predict_mask(result.params, cfg.net, samp.image)
        pairs.append((f"test_{i:03d}", gt, pred))
    report_path = workdir / "report.csv"
    evaluate_cohort(pairs, report_path)
    return {
        "labels": workdir / "labels",
        "model": model_path,
        "report": report_path,
        "report_json": report_path.with_suffix(".json"),
    }
