"""Unified command line: every pipeline stage as a subcommand.

Exit codes: 0 success, 1 operation failure (diagnostic on stderr), 2 usage
errors (bad flags, unknown subcommand).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .errors import SkullstripError
from .grid import Volume, conform, conform_target
from .labelprep import build_training_labels
from .manifest import load_manifest
from .maskops import BinaryMask, derive_target_mask, sdt
from .metrics import evaluate_cohort
from .net import (TrainSettings, UNetConfig, load_model, normalize_minmax,
                  predict_mask, save_model, strip_image, train)
from .nifti import read_nifti, write_nifti
from .phantom import make_phantom_labelmap
from .pipeline import generate_phantom_set, phantom_seed, run_pipeline
from .synth import synthesize_sample


def _add_phantom(sub):
    p = sub.add_parser("phantom", help="generate procedural head label maps")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--dims", type=int, default=32, help="grid size per axis")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--split", default="train", choices=("train", "val", "test"))
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_phantom)


def _cmd_phantom(args):
    from .manifest import ManifestEntry, write_manifest

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    entries = []
    for i in range(args.count):
        lm = make_phantom_labelmap(phantom_seed(args.seed, i), dims=args.dims)
        name = f"phantom_{i:03d}.nii.gz"
        write_nifti(lm, outdir / name)
        entries.append(ManifestEntry(f"phantom_{i:03d}", outdir / name, None,
                                     args.split))
    write_manifest(entries, outdir / "manifest.csv")
    print(f"wrote {args.count} label maps to {outdir}")
    return 0


def _add_labelprep(sub):
    p = sub.add_parser("labelprep",
                       help="fuse manual brain labels with GMM non-brain labels")
    p.add_argument("--image", required=True)
    p.add_argument("--brain-labels", required=True)
    p.add_argument("--k", type=int, default=6, help="mixture components")
    p.add_argument("--degree", type=int, default=3,
                   help="polynomial degree for non-uniformity correction")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_labelprep)


def _cmd_labelprep(args):
    image = read_nifti(args.image)
    manual = read_nifti(args.brain_labels, as_labels=True)
    fused = build_training_labels(image, manual, k=args.k, degree=args.degree,
                                  seed=args.seed)
    write_nifti(fused, args.out)
    print(f"wrote fused label map to {args.out}")
    return 0


def _add_synth(sub):
    p = sub.add_parser("synth", help="synthesize one training image from labels")
    p.add_argument("--labels", required=True)
    p.add_argument("--config", help="config file; [synth] section is used")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-image", required=True)
    p.add_argument("--out-labels", help="optionally also write the warped labels")
    p.set_defaults(func=_cmd_synth)


def _cmd_synth(args):
    labels = read_nifti(args.labels, as_labels=True)
    synth_cfg = (cfgmod.load_config(args.config).synth if args.config
                 else cfgmod.SynthConfig())
    sample = synthesize_sample(labels, synth_cfg, args.seed)
    write_nifti(sample.image, args.out_image)
    if args.out_labels:
        write_nifti(sample.warped_labels, args.out_labels)
    print(f"wrote synthesized image to {args.out_image}")
    return 0


def _add_mask(sub):
    p = sub.add_parser("mask", help="derive the ground-truth brain mask from labels")
    p.add_argument("--labels", required=True)
    p.add_argument("--close-iters", type=int, default=10,
                   help="closing radius in voxels (scale with resolution)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_mask)


def _cmd_mask(args):
    labels = read_nifti(args.labels, as_labels=True)
    mask = derive_target_mask(labels, args.close_iters)
    write_nifti(Volume(mask.grid, mask.data.astype(np.float32)), args.out)
    print(f"wrote brain mask to {args.out}")
    return 0


def _add_sdt(sub):
    p = sub.add_parser("sdt", help="signed distance transform of a binary mask")
    p.add_argument("--mask", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sdt)


def _cmd_sdt(args):
    vol = read_nifti(args.mask)
    mask = BinaryMask(vol.grid, vol.data > 0.5)
    dist = sdt(mask)
    write_nifti(Volume(dist.grid, dist.data.astype(np.float32)), args.out)
    print(f"wrote signed distance map to {args.out}")
    return 0


def _split_maps(labels_dir: Path):
    """Label maps for training and validation, via manifest when present."""
    manifest = labels_dir / "manifest.csv"
    if manifest.exists():
        entries = load_manifest(manifest)
        train_maps = [read_nifti(e.labels, as_labels=True)
                      for e in entries if e.split == "train"]
        val_maps = [read_nifti(e.labels, as_labels=True)
                    for e in entries if e.split == "val"]
        return train_maps, val_maps
    paths = sorted(labels_dir.glob("*.nii*"))
    if not paths:
        raise SkullstripError(f"no label maps found in {labels_dir}")
    maps = [read_nifti(p, as_labels=True) for p in paths]
    n_val = max(1, len(maps) // 8) if len(maps) > 1 else 0
    if n_val:
        return maps[:-n_val], maps[-n_val:]
    return maps, []


def _add_train(sub):
    p = sub.add_parser("train", help="train a mask-prediction network")
    p.add_argument("--labels", required=True,
                   help="directory of label maps (manifest.csv respected)")
    p.add_argument("--config", help="config file for [synth]/[net]/[train]/[loss]")
    p.add_argument("--loss", default=None, choices=("dice", "usdt", "wsdt"),
                   help="overrides loss.kind from the config")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="model file")
    p.set_defaults(func=_cmd_train)


def _cmd_train(args):
    cfg = cfgmod.load_config(args.config) if args.config else cfgmod.PipelineConfig()
    loss_kind = args.loss or cfg.loss.kind
    net_cfg = cfg.net
    head = "softmax2" if loss_kind == "dice" else "sdt1"
    if net_cfg.head != head:
        net_cfg = UNetConfig(levels=net_cfg.levels,
                             features_per_level=net_cfg.features_per_level,
                             convs_per_level=net_cfg.convs_per_level,
                             kernel=net_cfg.kernel, leaky_slope=net_cfg.leaky_slope,
                             head=head, input_size=net_cfg.input_size,
                             in_channels=net_cfg.in_channels)
    train_maps, val_maps = _split_maps(Path(args.labels))

    def log_fn(step, train_loss, val_loss, stale):
        print(f"step {step}: train {train_loss:.5f}  val {val_loss:.5f}  "
              f"stale {stale}", flush=True)

    result = train(net_cfg, train_maps, cfg.synth, loss_kind, val_maps,
                   args.seed, cfg.settings_with_loss(), log_fn=log_fn)
    save_model(args.out, net_cfg, result.params)
    print(f"trained {result.steps} steps, best validation loss "
          f"{result.best_val:.5f}; model at {args.out}")
    return 0


def _add_strip(sub):
    p = sub.add_parser("strip", help="predict a brain mask and strip an image")
    p.add_argument("--model", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--out-mask", required=True)
    p.add_argument("--out-stripped")
    p.set_defaults(func=_cmd_strip)


def _cmd_strip(args):
    net_cfg, params = load_model(args.model)
    vol = read_nifti(args.image)
    if vol.grid.dims != (net_cfg.input_size,) * 3:
        target = conform_target(vol.grid, net_cfg.input_size, 1.0, "LIA")
        vol = conform(vol, target)
    vol = normalize_minmax(vol)
    mask = predict_mask(params, net_cfg, vol)
    write_nifti(Volume(mask.grid, mask.data.astype(np.float32)), args.out_mask)
    if args.out_stripped:
        write_nifti(strip_image(vol, mask), args.out_stripped)
    print(f"wrote predicted mask to {args.out_mask}")
    return 0


def _add_eval(sub):
    p = sub.add_parser("eval", help="score predicted masks against ground truth")
    p.add_argument("--gt", required=True, help="directory of ground-truth masks")
    p.add_argument("--pred", required=True,
                   help="directory of predicted masks (matching filenames)")
    p.add_argument("--out", required=True, help="report CSV path")
    p.set_defaults(func=_cmd_eval)


def _read_mask(path) -> BinaryMask:
    vol = read_nifti(path)
    return BinaryMask(vol.grid, vol.data > 0.5)


def _cmd_eval(args):
    gt_dir, pred_dir = Path(args.gt), Path(args.pred)
    pairs = []
    for gt_path in sorted(gt_dir.glob("*.nii*")):
        pred_path = pred_dir / gt_path.name
        if not pred_path.exists():
            raise SkullstripError(f"no prediction for {gt_path.name} in {pred_dir}")
        subject = gt_path.name.split(".")[0]
        pairs.append((subject, _read_mask(gt_path), _read_mask(pred_path)))
    if not pairs:
        raise SkullstripError(f"no ground-truth masks found in {gt_dir}")
    reports, summary = evaluate_cohort(pairs, args.out)
    print(f"evaluated {len(reports)} subjects: "
          f"mean dice {summary['dice']['mean']:.4f}, "
          f"mean HD {summary['hd_mm']['mean']:.3f} mm; report at {args.out}")
    return 0


def _add_pipeline(sub):
    p = sub.add_parser("pipeline",
                       help="phantoms + training + stripping + evaluation")
    p.add_argument("--config", required=True)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=_cmd_pipeline)


def _cmd_pipeline(args):
    cfg = cfgmod.load_config(args.config)

    def log_fn(step, train_loss, val_loss, stale):
        if not args.quiet:
            print(f"step {step}: train {train_loss:.5f}  val {val_loss:.5f}  "
                  f"stale {stale}", flush=True)

    outputs = run_pipeline(cfg, log_fn=log_fn)
    for kind, path in outputs.items():
        print(f"{kind}: {path}")
    return 0


def _add_config(sub):
    p = sub.add_parser("config", help="configuration helpers")
    p.add_argument("--dump-defaults", action="store_true",
                   help="print every default config value")
    p.set_defaults(func=_cmd_config)


def _cmd_config(args):
    if args.dump_defaults:
        print(cfgmod.dump_defaults())
        return 0
    print("nothing to do; see --help", file=sys.stderr)
    return 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skullstrip",
        description="Synthesis-driven training and evaluation for 3D "
                    "brain-mask extraction",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for add in (_add_phantom, _add_labelprep, _add_synth, _add_mask, _add_sdt,
                _add_train, _add_strip, _add_eval, _add_pipeline, _add_config):
        add(sub)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SkullstripError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
