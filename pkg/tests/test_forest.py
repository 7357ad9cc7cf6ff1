import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from treetransfer.data import CATEGORICAL, Dataset, Feature, Schema, SchemaError
from treetransfer.forest import (
    EmptyDistributionError,
    Forest,
    InductionConfig,
    LabelDistribution,
    TreeNode,
    build_forest,
    build_tree,
    entropy,
    information_gain,
    predict,
    predict_batch,
    route,
    tree_predict,
)

from conftest import box_data, random_dataset


def oracle_entropy(counts):
    n = sum(counts)
    return -sum(c / n * math.log2(c / n) for c in counts if c)


def oracle_ig(xs, ys, tau):
    classes = sorted(set(ys)) or [0]
    left = [y for x, y in zip(xs, ys) if x <= tau]
    right = [y for x, y in zip(xs, ys) if x > tau]

    def h(labels):
        return oracle_entropy([labels.count(c) for c in classes]) if labels else 0.0

    n = len(ys)
    return h(list(ys)) - len(left) / n * h(left) - len(right) / n * h(right)


def leaf(*counts):
    return TreeNode.leaf(LabelDistribution(counts))


class TestEntropy:
    def test_pure(self):
        assert entropy([1.0, 0.0]) == 0.0

    def test_uniform_binary(self):
        assert entropy([0.5, 0.5]) == 1.0

    def test_three_to_one(self):
        assert entropy([0.75, 0.25]) == pytest.approx(0.8112781, abs=1e-7)
        assert entropy(LabelDistribution((3, 1))) == pytest.approx(oracle_entropy([3, 1]), abs=1e-12)

    def test_empty(self):
        with pytest.raises(EmptyDistributionError, match="empty distribution"):
            entropy(LabelDistribution((0, 0)))


def one_feature(xs, ys, n_classes=2):
    return Dataset(Schema.numeric(1, n_classes), np.array(xs, float)[:, None], np.array(ys))


class TestInformationGain:
    def test_perfect_split(self):
        assert information_gain(one_feature([1, 2, 3, 4], [1, 1, 0, 0]), 0, 2.5) == 1.0

    def test_no_partition(self):
        assert information_gain(one_feature([1, 2, 3, 4], [1, 1, 0, 0]), 0, 10.0) == 0.0

    def test_isolating_minority(self):
        ig = information_gain(one_feature([1, 2, 3, 4], [1, 1, 1, 0]), 0, 3.5)
        assert ig == pytest.approx(0.8112781, abs=1e-7)
        assert ig == pytest.approx(oracle_ig([1, 2, 3, 4], [1, 1, 1, 0], 3.5), abs=1e-12)

    def test_errors(self):
        with pytest.raises(ValueError):
            information_gain(one_feature([], []), 0, 0.5)
        schema = Schema((Feature("c", CATEGORICAL, ("a", "b")),), 2)
        data = Dataset(schema, np.array([[0.0], [1.0]]), np.array([0, 1]))
        with pytest.raises(ValueError, match="IG threshold form requires numeric feature"):
            information_gain(data, 0, 0.5)

    @settings(max_examples=300, deadline=None)
    @given(
        rows=st.lists(
            st.tuples(
                st.lists(st.integers(0, 4), min_size=3, max_size=3),
                st.integers(0, 2),
            ),
            min_size=1,
            max_size=12,
        ),
        feature=st.integers(0, 2),
        tau=st.integers(-1, 5),
    )
    def test_matches_count_oracle(self, rows, feature, tau):
        X = np.array([r[0] for r in rows], dtype=float)
        y = np.array([r[1] for r in rows])
        data = Dataset(Schema.numeric(3, 3), X, y)
        got = information_gain(data, feature, tau + 0.5)
        want = oracle_ig(X[:, feature].tolist(), y.tolist(), tau + 0.5)
        assert abs(got - want) <= 1e-9
        assert 0.0 <= got <= oracle_entropy(np.bincount(y).tolist()) + 1e-12


class TestBuildTree:
    def test_pure_samples_give_single_leaf(self, rng):
        data = one_feature([0.1, 0.5, 0.9], [1, 1, 1])
        tree = build_tree(data, InductionConfig(), rng)
        assert tree.is_leaf and tree.label == 1
        assert tree.leaf_dist.probs.tolist() == [0.0, 1.0]

    def test_xor_depth_two(self, rng):
        X = np.array([[0, 0], [0, 1], [1, 0], [1, 1]], dtype=float)
        data = Dataset(Schema.numeric(2, 2), X, np.array([0, 1, 1, 0]))
        tree = build_tree(data, InductionConfig(feature_subsample="all"), rng)
        assert tree.depth == 2
        assert np.array_equal(tree_predict(tree, X), data.y)

    def test_box_concept_recovered(self, rng):
        # single centered box with ample samples: the tree isolates it and generalizes
        data = box_data(rng, 3000)
        tree = build_tree(data, InductionConfig(feature_subsample="all"), rng)
        test = box_data(rng, 5000)
        assert np.mean(tree_predict(tree, test.X) != test.y) < 0.02
        thresholds = sorted(n.threshold for n in tree.iter_nodes() if n.kind == "numeric")
        assert any(abs(t - 0.2) < 0.02 for t in thresholds)
        assert any(abs(t - 0.8) < 0.02 for t in thresholds)

    def test_empty_samples(self, rng):
        with pytest.raises(ValueError):
            build_tree(one_feature([], []), InductionConfig(), rng)

    def test_categorical_multiway(self, rng):
        schema = Schema((Feature("c", CATEGORICAL, ("a", "b", "c")),), 2)
        data = Dataset(schema, np.array([[0.0], [0.0], [1.0], [1.0]]), np.array([0, 0, 1, 1]))
        tree = build_tree(data, InductionConfig(), rng)
        assert tree.kind == "categorical" and len(tree.children) == 3
        assert tree.retained_left is None
        # category "c" never seen: child keeps the node's distribution
        assert tree.children[2].leaf_dist.counts == (2, 2)

    def test_max_depth(self, rng):
        data = box_data(rng, 500)
        assert build_tree(data, InductionConfig(max_depth=2), rng).depth <= 2

    @settings(max_examples=150, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_retained_distributions_replay(self, seed):
        r = np.random.default_rng(seed)
        data = random_dataset(r)
        tree = build_tree(data, InductionConfig(), np.random.default_rng(seed))

        def check(node, X, y):
            if node.is_leaf:
                assert node.leaf_dist.counts == tuple(np.bincount(y, minlength=data.schema.n_classes))
                return
            col = X[:, node.feature]
            if node.kind == "numeric":
                left = col <= node.threshold
                assert node.retained_left.counts == tuple(np.bincount(y[left], minlength=data.schema.n_classes))
                assert node.retained_right.counts == tuple(np.bincount(y[~left], minlength=data.schema.n_classes))
                assert node.retained_left.count > 0 and node.retained_right.count > 0
                masks = [left, ~left]
            else:
                masks = [col == k for k in range(len(node.children))]
            for child, m in zip(node.children, masks):
                if m.any():
                    check(child, X[m], y[m])

        check(tree, data.X, data.y)
        # every training sample reaches exactly one leaf
        reached = np.concatenate([idx for _, idx in route(tree, data.X)])
        assert np.array_equal(np.sort(reached), np.arange(len(data)))


class TestForest:
    def test_single_tree_forest_matches_tree(self, rng):
        data = box_data(rng, 200)
        forest = build_forest(data, InductionConfig(tree_count=1))
        test = box_data(rng, 500)
        labels, _ = predict_batch(forest, test.X)
        assert np.array_equal(labels, tree_predict(forest.trees[0], test.X))

    def test_seeds_differ(self, rng):
        data = box_data(rng, 200)
        a = build_forest(data, InductionConfig(tree_count=5, seed=1))
        b = build_forest(data, InductionConfig(tree_count=5, seed=2))
        assert a.trees != b.trees

    def test_deterministic(self, rng):
        data = box_data(rng, 200)
        assert build_forest(data, InductionConfig(tree_count=5, seed=3)) == build_forest(
            data, InductionConfig(tree_count=5, seed=3)
        )

    def test_weight_invariants(self):
        with pytest.raises(ValueError):
            Forest((leaf(1, 0),), (0.5,), Schema.numeric(1))
        with pytest.raises(ValueError):
            Forest((leaf(1, 0), leaf(0, 1)), (1.0,), Schema.numeric(1))

    def test_schema_violations(self):
        bad = TreeNode.numeric(3, 0.5, leaf(1, 0), leaf(0, 1), LabelDistribution((1, 0)), LabelDistribution((0, 1)))
        with pytest.raises(SchemaError):
            Forest.uniform([bad], Schema.numeric(1), "x")
        with pytest.raises(SchemaError):
            Forest.uniform([leaf(1, 0, 0)], Schema.numeric(1), "x")


class TestPredict:
    schema = Schema.numeric(1, 3)

    def test_single_leaf(self):
        f = Forest.uniform([leaf(0, 5, 1)], self.schema, "x")
        assert predict(f, [0.3])[0] == 1

    def test_weighted_vote(self):
        f = Forest((leaf(3, 0, 0), leaf(0, 3, 0)), (0.7, 0.3), self.schema)
        label, scores = predict(f, [0.0])
        assert label == 0
        assert scores.tolist() == pytest.approx([0.7, 0.3, 0.0])

    def test_tie_goes_to_lowest_class(self):
        f = Forest((leaf(0, 0, 2), leaf(2, 0, 0)), (0.5, 0.5), self.schema)
        assert predict(f, [0.0])[0] == 0

    def test_leaf_tie_break(self):
        assert LabelDistribution((2, 2)).label == 0

    def test_schema_mismatch(self):
        f = Forest.uniform([leaf(1, 0, 0)], self.schema, "x")
        with pytest.raises(SchemaError):
            predict(f, [0.0, 1.0])

    def test_threshold_routing_is_inclusive_left(self):
        node = TreeNode.numeric(0, 0.5, leaf(1, 0, 0), leaf(0, 1, 0), LabelDistribution((1, 0, 0)), LabelDistribution((0, 1, 0)))
        f = Forest.uniform([node], self.schema, "x")
        labels, _ = predict_batch(f, np.array([[0.5], [0.5000001]]))
        assert labels.tolist() == [0, 1]
