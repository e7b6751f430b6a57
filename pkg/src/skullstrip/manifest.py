"""Dataset manifest: one CSV listing subjects, label maps, and splits."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from .errors import FormatError

SPLITS = ("train", "val", "test")
COLUMNS = ("subject", "labels", "image", "split")


@dataclass(frozen=True)
class ManifestEntry:
    subject: str
    labels: Path
    image: Path | None
    split: str


def write_manifest(entries: list[ManifestEntry], path) -> None:
    path = Path(path)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(COLUMNS)
        for e in entries:
            writer.writerow([
                e.subject,
                _relative(e.labels, path.parent),
                _relative(e.image, path.parent) if e.image else "",
                e.split,
            ])


def _relative(target: Path, base: Path) -> str:
    try:
        return str(Path(target).relative_to(base))
    except ValueError:
        return str(target)


def load_manifest(path) -> list[ManifestEntry]:
    """Read and validate a manifest; paths resolve relative to the CSV."""
    path = Path(path)
    base = path.parent
    entries: list[ManifestEntry] = []
    seen: set[str] = set()
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or tuple(reader.fieldnames) != COLUMNS:
            raise FormatError(
                f"{path}: manifest columns must be {','.join(COLUMNS)}"
            )
        for row in reader:
            subject = row["subject"].strip()
            if not subject:
                raise FormatError(f"{path}: empty subject id")
            if subject in seen:
                raise FormatError(f"{path}: duplicate subject id {subject!r}")
            seen.add(subject)
            split = row["split"].strip()
            if split not in SPLITS:
                raise FormatError(f"{path}: bad split {split!r} for {subject}")
            labels = (base / row["labels"]).resolve()
            if not labels.exists():
                raise FormatError(f"{path}: label map {labels} does not exist")
            image = None
            if row["image"].strip():
                image = (base / row["image"]).resolve()
                if not image.exists():
                    raise FormatError(f"{path}: image {image} does not exist")
            entries.append(ManifestEntry(subject, labels, image, split))
    return entries
