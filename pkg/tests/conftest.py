import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from skullstrip.grid import Grid, LabelCategory, LabelInfo, LabelMap
from skullstrip.maskops import BinaryMask


@pytest.fixture
def grid8():
    return Grid.standard(8, 1.0, "LIA")


@pytest.fixture
def tiny_schema():
    return {
        0: LabelInfo("background", LabelCategory.BACKGROUND),
        1: LabelInfo("brain_a", LabelCategory.BRAIN),
        2: LabelInfo("brain_b", LabelCategory.BRAIN),
        3: LabelInfo("csf", LabelCategory.CSF_NONVENTRICULAR),
        4: LabelInfo("skull", LabelCategory.NONBRAIN_SYNTHETIC),
    }


def make_mask(data):
    data = np.asarray(data, dtype=bool)
    return BinaryMask(Grid.standard(data.shape, 1.0, "LIA"), data)


def make_labels(data, schema):
    data = np.asarray(data, dtype=np.int32)
    return LabelMap(Grid.standard(data.shape, 1.0, "LIA"), data, schema)


@pytest.fixture
def mask_factory():
    return make_mask


@pytest.fixture
def label_factory():
    return make_labels
