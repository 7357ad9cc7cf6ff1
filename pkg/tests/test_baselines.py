import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from treetransfer.baselines import WEIGHT_FLOOR, bias, prune, relabel, src_only, tgt_only
from treetransfer.data import Dataset, Schema
from treetransfer.forest import Forest, InductionConfig, LabelDistribution, TreeNode, build_forest, predict_batch
from treetransfer.ser import ser_trees

from conftest import box_data, random_forest
from test_ser import noisy_subtree_fixture, stump

SCHEMA = Schema.numeric(1, 2)


def splits(tree):
    return [(n.feature, n.threshold) for n in tree.iter_nodes() if not n.is_leaf]


def test_src_only_identity(rng):
    forest, _ = random_forest(rng)
    assert src_only(forest) is forest


def test_tgt_only_deterministic_and_useful(rng):
    target = box_data(rng, 64)
    config = InductionConfig(tree_count=10, seed=4)
    a, b = tgt_only(target, config), tgt_only(target, config)
    assert a == b and a.provenance == "tgt_only"
    test = box_data(rng, 5000)
    err = np.mean(predict_batch(a, test.X)[0] != test.y)
    assert 0 < err < 0.45


class TestRelabel:
    def test_label_flip(self, rng):
        source = box_data(rng, 400)
        forest = build_forest(source, InductionConfig(tree_count=10))
        flipped = Dataset(source.schema, source.X, 1 - source.y)
        out = relabel(forest, flipped)
        base = np.mean(predict_batch(forest, source.X)[0] != source.y)
        err = np.mean(predict_batch(out, source.X)[0] != flipped.y)
        assert err == pytest.approx(base, abs=1e-12)
        assert [splits(t) for t in out.trees] == [splits(t) for t in forest.trees]

    def test_unreached_leaf_unchanged(self):
        tree = stump(0, 1)
        forest = Forest.uniform([tree], SCHEMA, "x")
        out = relabel(forest, Dataset(SCHEMA, np.array([[0.2]]), np.array([1])))
        assert out.trees[0].children[1] is tree.children[1]
        assert out.trees[0].children[0].leaf_dist.counts == (0, 1)

    def test_same_data_reproduces_leaves(self, rng):
        source = box_data(rng, 200)
        forest = build_forest(source, InductionConfig(tree_count=3))
        assert relabel(forest, source).trees == forest.trees


class TestBias:
    def test_equal_accuracy_uniform(self):
        forest = Forest.uniform([stump(0, 1), stump(0, 1)], SCHEMA, "x")
        out = bias(forest, Dataset(SCHEMA, np.array([[0.2], [0.8]]), np.array([0, 1])))
        assert out.weights == pytest.approx((0.5, 0.5))
        assert out.provenance == "bias:accuracy"

    def test_perfect_and_wrong(self):
        forest = Forest.uniform([stump(0, 1), stump(1, 0)], SCHEMA, "x")
        out = bias(forest, Dataset(SCHEMA, np.array([[0.2], [0.8]]), np.array([0, 1])))
        assert out.weights[0] == pytest.approx(1.0, abs=1e-5)
        assert out.weights[1] == pytest.approx(WEIGHT_FLOOR, rel=1e-3)
        assert sum(out.weights) == pytest.approx(1.0, abs=1e-12)

    def test_softmax_scheme(self):
        forest = Forest.uniform([stump(0, 1), stump(1, 0)], SCHEMA, "x")
        out = bias(forest, Dataset(SCHEMA, np.array([[0.2], [0.8]]), np.array([0, 1])), scheme="softmax")
        assert out.weights[0] > 0.99 and out.provenance == "bias:softmax"
        with pytest.raises(ValueError):
            bias(forest, Dataset(SCHEMA, np.array([[0.2]]), np.array([0])), scheme="nope")

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_weights_normalized_structure_untouched(self, seed):
        rng = np.random.default_rng(seed)
        forest, data = random_forest(rng)
        out = bias(forest, data)
        assert sum(out.weights) == pytest.approx(1.0, abs=1e-9)
        assert out.trees == forest.trees


class TestPrune:
    def test_shared_fixture_collapses(self):
        tree, data = noisy_subtree_fixture()
        out = prune(Forest.uniform([tree], SCHEMA, "x"), data)
        assert out.trees[0].is_leaf and out.trees[0].label == 0
        assert out.provenance == "prune"

    def test_optimal_tree_unchanged(self):
        tree = stump(0, 1)
        data = Dataset(SCHEMA, np.array([[0.2], [0.3], [0.8]]), np.array([0, 0, 1]))
        assert prune(Forest.uniform([tree], SCHEMA, "x"), data).trees[0] == tree

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_equals_reduction_only_ser(self, seed):
        rng = np.random.default_rng(seed)
        forest, data = random_forest(rng)
        y = rng.integers(0, data.schema.n_classes, len(data))
        target = Dataset(data.schema, data.X, y)
        out = prune(forest, target)
        want = [t for t, _ in ser_trees(forest, target, InductionConfig(), expand=False)]
        assert list(out.trees) == want
        for before, after in zip(forest.trees, out.trees):
            assert after.n_nodes <= before.n_nodes
        assert out.weights == forest.weights
