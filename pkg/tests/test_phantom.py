import numpy as np
import pytest

from oracles import connected_components_6
from skullstrip.errors import ParameterError
from skullstrip.grid import LabelCategory
from skullstrip.maskops import merge_brain_labels
from skullstrip.phantom import PHANTOM_SCHEMA, make_phantom_labelmap


class TestPhantom:
    def test_every_category_present(self):
        for seed in range(6):
            lm = make_phantom_labelmap(seed, 32)
            cats = {PHANTOM_SCHEMA[v].category for v in np.unique(lm.data)}
            assert cats == set(LabelCategory)

    @pytest.mark.parametrize("seed", range(6))
    def test_brain_single_connected_component(self, seed):
        lm = make_phantom_labelmap(seed, 32)
        brain = merge_brain_labels(lm)
        assert connected_components_6(brain.data) == 1

    def test_deterministic(self):
        a = make_phantom_labelmap(42, 32)
        b = make_phantom_labelmap(42, 32)
        assert np.array_equal(a.data, b.data)

    def test_small_dims_rejected(self):
        with pytest.raises(ParameterError):
            make_phantom_labelmap(0, 16)

    def test_larger_grid(self):
        lm = make_phantom_labelmap(3, (40, 36, 44))
        assert lm.grid.dims == (40, 36, 44)
        cats = {PHANTOM_SCHEMA[v].category for v in np.unique(lm.data)}
        assert cats == set(LabelCategory)

    def test_grid_is_isotropic_lia(self):
        lm = make_phantom_labelmap(0, 32)
        assert lm.grid.voxel_size == (1.0, 1.0, 1.0)
        assert lm.grid.orientation == "LIA"

    def test_brain_clears_grid_edge(self):
        # closing in the target derivation needs margin from the field edge
        for seed in range(4):
            lm = make_phantom_labelmap(seed, 32)
            brain = merge_brain_labels(lm).data
            coords = np.argwhere(brain)
            dims = np.asarray(brain.shape)
            margin = np.minimum(coords, dims - 1 - coords).min()
            assert margin >= 3
