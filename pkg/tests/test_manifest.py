import numpy as np
import pytest

from skullstrip.errors import FormatError
from skullstrip.grid import Grid, LabelCategory, LabelInfo, LabelMap
from skullstrip.manifest import ManifestEntry, load_manifest, write_manifest
from skullstrip.nifti import write_nifti


def _write_labels(path):
    schema = {0: LabelInfo("background", LabelCategory.BACKGROUND),
              1: LabelInfo("brain", LabelCategory.BRAIN)}
    lm = LabelMap(Grid.standard(32, 1.0, "LIA"),
                  np.zeros((32, 32, 32), dtype=np.int32), schema)
    write_nifti(lm, path)


class TestManifest:
    def test_round_trip(self, tmp_path):
        for i in range(3):
            _write_labels(tmp_path / f"s{i}.nii.gz")
        entries = [
            ManifestEntry("s0", tmp_path / "s0.nii.gz", None, "train"),
            ManifestEntry("s1", tmp_path / "s1.nii.gz", None, "val"),
            ManifestEntry("s2", tmp_path / "s2.nii.gz", None, "test"),
        ]
        write_manifest(entries, tmp_path / "manifest.csv")
        back = load_manifest(tmp_path / "manifest.csv")
        assert [e.subject for e in back] == ["s0", "s1", "s2"]
        assert [e.split for e in back] == ["train", "val", "test"]
        assert all(e.labels.exists() for e in back)

    def test_duplicate_subject_rejected(self, tmp_path):
        _write_labels(tmp_path / "s0.nii.gz")
        (tmp_path / "manifest.csv").write_text(
            "subject,labels,image,split\ns0,s0.nii.gz,,train\ns0,s0.nii.gz,,val\n"
        )
        with pytest.raises(FormatError, match="duplicate"):
            load_manifest(tmp_path / "manifest.csv")

    def test_missing_file_rejected(self, tmp_path):
        (tmp_path / "manifest.csv").write_text(
            "subject,labels,image,split\ns0,gone.nii.gz,,train\n"
        )
        with pytest.raises(FormatError, match="does not exist"):
            load_manifest(tmp_path / "manifest.csv")

    def test_bad_split_rejected(self, tmp_path):
        _write_labels(tmp_path / "s0.nii.gz")
        (tmp_path / "manifest.csv").write_text(
            "subject,labels,image,split\ns0,s0.nii.gz,,holdout\n"
        )
        with pytest.raises(FormatError, match="split"):
            load_manifest(tmp_path / "manifest.csv")

    def test_wrong_columns_rejected(self, tmp_path):
        (tmp_path / "manifest.csv").write_text("id,path\na,b\n")
        with pytest.raises(FormatError, match="columns"):
            load_manifest(tmp_path / "manifest.csv")
