"""Decision-tree and random-forest induction and prediction.

Every numeric split keeps the label counts of the training samples that went
left and right of its threshold. Threshold refitting needs them later, once the
source data is gone.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import InitVar, dataclass, field
from typing import Iterator, Sequence

import numpy as np

from . import kernels
from .data import Dataset, Schema, SchemaError, check_vector

LEAF = "leaf"
NUMERIC_SPLIT = "numeric"
CATEGORICAL_SPLIT = "categorical"

# Vote shares closer than this count as tied.
TIE_TOL = 1e-12


class EmptyDistributionError(ValueError):
    pass


@dataclass(frozen=True)
class LabelDistribution:
    """Label counts over the class ids; probabilities are derived from them.

    Counts rather than probabilities are stored so that a model file
    round-trips exactly.
    """

    counts: tuple[int, ...]
    label: int = field(init=False, compare=False, repr=False)

    def __post_init__(self) -> None:
        if any(c < 0 for c in self.counts):
            raise ValueError("negative count in label distribution")
        # argmax with ties to the lowest class id
        best = max(self.counts) if self.counts else 0
        object.__setattr__(self, "label", self.counts.index(best) if self.counts else 0)

    @classmethod
    def from_labels(cls, y: np.ndarray, n_classes: int) -> LabelDistribution:
        return cls(tuple(np.bincount(y, minlength=n_classes).tolist()))

    @classmethod
    def from_counts(cls, counts: Sequence[int] | np.ndarray) -> LabelDistribution:
        if isinstance(counts, np.ndarray):
            return cls(tuple(counts.astype(np.int64).tolist()))
        return cls(tuple(int(c) for c in counts))

    @property
    def count(self) -> int:
        return sum(self.counts)

    @property
    def is_empty(self) -> bool:
        return self.count == 0

    @property
    def probs(self) -> np.ndarray:
        c = np.asarray(self.counts, dtype=np.float64)
        total = c.sum()
        if total == 0:
            return c
        return c / total

    def __add__(self, other: LabelDistribution) -> LabelDistribution:
        return LabelDistribution(tuple(a + b for a, b in zip(self.counts, other.counts)))


@dataclass(frozen=True)
class TreeNode:
    kind: str
    feature: int = -1
    threshold: float | None = None
    children: tuple[TreeNode, ...] = ()
    retained_left: LabelDistribution | None = None
    retained_right: LabelDistribution | None = None
    leaf_dist: LabelDistribution | None = None

    def __post_init__(self) -> None:
        if self.kind == LEAF:
            if self.children or self.leaf_dist is None:
                raise ValueError("a leaf has no children and carries leaf_dist")
        elif self.kind == NUMERIC_SPLIT:
            if len(self.children) != 2 or self.threshold is None:
                raise ValueError("a numeric split has a threshold and exactly 2 children")
        elif self.kind == CATEGORICAL_SPLIT:
            if len(self.children) < 2:
                raise ValueError("a categorical split needs one child per category")
        else:
            raise ValueError(f"unknown node kind {self.kind!r}")

    @classmethod
    def leaf(cls, dist: LabelDistribution) -> TreeNode:
        return cls(LEAF, leaf_dist=dist)

    @classmethod
    def numeric(
        cls,
        feature: int,
        threshold: float,
        left: TreeNode,
        right: TreeNode,
        retained_left: LabelDistribution | None,
        retained_right: LabelDistribution | None,
    ) -> TreeNode:
        return cls(
            NUMERIC_SPLIT,
            feature=feature,
            threshold=float(threshold),
            children=(left, right),
            retained_left=retained_left,
            retained_right=retained_right,
        )

    @classmethod
    def categorical(cls, feature: int, children: Sequence[TreeNode]) -> TreeNode:
        return cls(CATEGORICAL_SPLIT, feature=feature, children=tuple(children))

    @property
    def is_leaf(self) -> bool:
        return self.kind == LEAF

    @property
    def label(self) -> int:
        assert self.leaf_dist is not None
        return self.leaf_dist.label

    def iter_nodes(self) -> Iterator[TreeNode]:
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def leaves(self) -> Iterator[TreeNode]:
        return (n for n in self.iter_nodes() if n.is_leaf)

    @property
    def n_nodes(self) -> int:
        return sum(1 for _ in self.iter_nodes())

    @property
    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(c.depth for c in self.children)

    def subtree_votes(self) -> LabelDistribution:
        """Summed leaf counts below this node."""
        total = None
        for leaf in self.leaves():
            total = leaf.leaf_dist if total is None else total + leaf.leaf_dist
        return total


def validate_tree(root: TreeNode, schema: Schema) -> None:
    for node in root.iter_nodes():
        dists = [node.leaf_dist, node.retained_left, node.retained_right]
        for d in dists:
            if d is not None and len(d.counts) != schema.n_classes:
                raise SchemaError("distribution length differs from class count")
        if node.is_leaf:
            continue
        if not 0 <= node.feature < schema.n_features:
            raise SchemaError(f"feature index {node.feature} outside schema")
        feat = schema.features[node.feature]
        if node.kind == NUMERIC_SPLIT and not feat.is_numeric:
            raise SchemaError(f"numeric split on categorical feature {feat.name!r}")
        if node.kind == CATEGORICAL_SPLIT:
            if feat.is_numeric:
                raise SchemaError(f"categorical split on numeric feature {feat.name!r}")
            if len(node.children) != len(feat.categories):
                raise SchemaError(f"split on {feat.name!r} needs one child per category")


@dataclass(frozen=True)
class Forest:
    trees: tuple[TreeNode, ...]
    weights: tuple[float, ...]
    schema: Schema
    provenance: str = "source-trained"
    _flat: tuple | None = field(default=None, init=False, compare=False, repr=False)
    check: InitVar[bool] = True

    def __post_init__(self, check: bool) -> None:
        object.__setattr__(self, "trees", tuple(self.trees))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if not self.trees:
            raise ValueError("a forest needs at least one tree")
        if len(self.weights) != len(self.trees):
            raise ValueError("one weight per tree is required")
        if any(w < 0 for w in self.weights) or abs(sum(self.weights) - 1.0) > 1e-9:
            raise ValueError("weights must be non-negative and sum to 1")
        # transforms of an already validated forest pass check=False
        if check:
            for tree in self.trees:
                validate_tree(tree, self.schema)

    @classmethod
    def uniform(
        cls, trees: Sequence[TreeNode], schema: Schema, provenance: str, check: bool = True
    ) -> Forest:
        n = len(trees)
        return cls(tuple(trees), (1.0 / n,) * n, schema, provenance, check)

    def __len__(self) -> int:
        return len(self.trees)

    def flat(self) -> tuple[np.ndarray, ...]:
        """Array form of all trees for compiled routing, built once."""
        if self._flat is None:
            object.__setattr__(self, "_flat", flatten(self.trees))
        return self._flat


_KIND_CODE = {LEAF: 0, NUMERIC_SPLIT: 1, CATEGORICAL_SPLIT: 2}


def flatten(trees: Sequence[TreeNode]) -> tuple[np.ndarray, ...]:
    """(kind, feature, threshold, first_child, label, roots) with siblings stored contiguously."""
    kind, feature, threshold, first_child, label, roots = [], [], [], [], [], []
    for root in trees:
        roots.append(len(kind))
        queue = deque([root])
        head = len(kind)
        kind.append(0)
        feature.append(0)
        threshold.append(0.0)
        first_child.append(-1)
        label.append(0)
        while queue:
            node = queue.popleft()
            i = head
            head += 1
            kind[i] = _KIND_CODE[node.kind]
            if node.is_leaf:
                label[i] = node.label
                continue
            feature[i] = node.feature
            threshold[i] = node.threshold if node.threshold is not None else 0.0
            first_child[i] = len(kind)
            for child in node.children:
                queue.append(child)
                kind.append(0)
                feature.append(0)
                threshold.append(0.0)
                first_child.append(-1)
                label.append(0)
    return (
        np.asarray(kind, dtype=np.int64),
        np.asarray(feature, dtype=np.int64),
        np.asarray(threshold, dtype=np.float64),
        np.asarray(first_child, dtype=np.int64),
        np.asarray(label, dtype=np.int64),
        np.asarray(roots, dtype=np.int64),
    )


@dataclass(frozen=True)
class InductionConfig:
    """Forest induction settings.

    ``feature_subsample`` is ``"log2"`` (ceil(log2 r)), ``"sqrt"``, ``"all"``
    or a fixed positive count.
    """

    tree_count: int = 50
    feature_subsample: str | int = "log2"
    min_samples_split: int = 2
    max_depth: int | None = None
    seed: int = 0
    bootstrap: bool = False

    def __post_init__(self) -> None:
        if self.tree_count < 1:
            raise ValueError("tree_count must be >= 1")
        if self.min_samples_split < 1:
            raise ValueError("min_samples_split must be >= 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be non-negative")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    def candidate_count(self, n_features: int) -> int:
        rule = self.feature_subsample
        if rule == "log2":
            k = math.ceil(math.log2(n_features)) if n_features > 1 else 1
        elif rule == "sqrt":
            k = math.ceil(math.sqrt(n_features))
        elif rule == "all":
            k = n_features
        elif isinstance(rule, int) and rule > 0:
            k = rule
        else:
            raise ValueError(f"unknown feature_subsample rule {rule!r}")
        return min(max(k, 1), n_features)


def derive_rng(seed: int, *path: int) -> np.random.Generator:
    """Independent stream for ``(seed, *path)``; the length tag keeps paths prefix-free."""
    return np.random.default_rng(np.random.SeedSequence([seed, len(path), *path]))


# -- information kernels -----------------------------------------------------


def entropy(dist: LabelDistribution | Sequence[float]) -> float:
    """Shannon entropy in bits."""
    if isinstance(dist, LabelDistribution):
        if dist.is_empty:
            raise EmptyDistributionError("empty distribution")
        p = dist.probs
    else:
        p = np.asarray(dist, dtype=np.float64)
        if p.size == 0 or p.sum() <= 0:
            raise EmptyDistributionError("empty distribution")
        p = p / p.sum()
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum()) + 0.0


def entropy_rows(counts: np.ndarray) -> np.ndarray:
    """Entropy in bits of each row of a count matrix; empty rows give 0."""
    counts = np.asarray(counts, dtype=np.float64)
    n = counts.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(n > 0, counts / np.where(n > 0, n, 1), 0.0)
        plogp = np.where(p > 0, p * np.log2(np.where(p > 0, p, 1)), 0.0)
    return -plogp.sum(axis=1)


def information_gain(samples: Dataset, feature: int, threshold: float) -> float:
    """Entropy reduction (bits) from splitting ``samples`` at ``x[feature] <= threshold``."""
    if len(samples) == 0:
        raise ValueError("information gain of an empty sample set")
    if not samples.schema.features[feature].is_numeric:
        raise ValueError("IG threshold form requires numeric feature")
    c = samples.schema.n_classes
    go_left = samples.X[:, feature] <= threshold
    left = np.bincount(samples.y[go_left], minlength=c)
    right = np.bincount(samples.y[~go_left], minlength=c)
    return split_gain(np.stack([left, right]))


def split_gain(child_counts: np.ndarray) -> float:
    """Gain of a partition given its (k, C) child count matrix."""
    child_counts = np.asarray(child_counts, dtype=np.float64)
    sizes = child_counts.sum(axis=1)
    n = sizes.sum()
    parent = entropy_rows(child_counts.sum(axis=0, keepdims=True))[0]
    child = float((sizes * entropy_rows(child_counts)).sum() / n)
    return max(parent - child, 0.0)


# -- induction ---------------------------------------------------------------


def build_tree(samples: Dataset, config: InductionConfig, rng: np.random.Generator) -> TreeNode:
    if len(samples) == 0:
        raise ValueError("cannot build a tree from an empty sample set")
    return grow(samples.X, samples.y, samples.schema, config, rng)


def grow(
    X: np.ndarray,
    y: np.ndarray,
    schema: Schema,
    config: InductionConfig,
    rng: np.random.Generator,
    depth: int = 0,
) -> TreeNode:
    n_classes = schema.n_classes
    counts = np.bincount(y, minlength=n_classes)
    dist = LabelDistribution.from_counts(counts)
    if (
        len(y) < config.min_samples_split
        or np.count_nonzero(counts) <= 1
        or (config.max_depth is not None and depth >= config.max_depth)
    ):
        return TreeNode.leaf(dist)

    split = _best_split(X, y, schema, config, rng, counts)
    if split is None:
        return TreeNode.leaf(dist)

    feature, threshold = split
    col = X[:, feature]
    if threshold is not None:
        go_left = col <= threshold
        y_left, y_right = y[go_left], y[~go_left]
        left = grow(X[go_left], y_left, schema, config, rng, depth + 1)
        right = grow(X[~go_left], y_right, schema, config, rng, depth + 1)
        return TreeNode.numeric(
            feature,
            threshold,
            left,
            right,
            LabelDistribution.from_labels(y_left, n_classes),
            LabelDistribution.from_labels(y_right, n_classes),
        )

    children = []
    codes = col.astype(np.int64)
    for k in range(len(schema.features[feature].categories)):
        mask = codes == k
        if mask.any():
            children.append(grow(X[mask], y[mask], schema, config, rng, depth + 1))
        else:
            # unseen category at this node: fall back to the node's distribution
            children.append(TreeNode.leaf(dist))
    return TreeNode.categorical(feature, children)


def _best_split(X, y, schema, config, rng, counts):
    """(feature, threshold) of the best split, threshold None for categorical."""
    order = rng.permutation(schema.n_features)
    k = config.candidate_count(schema.n_features)
    best = None
    best_gain = -1.0
    for drawn, feature in enumerate(order):
        # past the quota, keep drawing only until some valid split exists
        if drawn >= k and best is not None:
            break
        col = np.ascontiguousarray(X[:, feature])
        if schema.features[feature].is_numeric:
            gain, threshold = kernels.best_numeric_split(col, y, schema.n_classes)
            if gain > best_gain:
                best_gain = gain
                best = (int(feature), float(threshold))
        else:
            n_cat = len(schema.features[feature].categories)
            table = np.zeros((n_cat, schema.n_classes))
            np.add.at(table, (col.astype(np.int64), y), 1.0)
            if np.count_nonzero(table.sum(axis=1)) < 2:
                continue
            gain = split_gain(table[table.sum(axis=1) > 0])
            if gain > best_gain:
                best_gain = gain
                best = (int(feature), None)
    return best


def build_forest(samples: Dataset, config: InductionConfig, provenance: str = "source-trained") -> Forest:
    if len(samples) == 0:
        raise ValueError("cannot build a forest from an empty sample set")
    trees = []
    for t in range(config.tree_count):
        rng = derive_rng(config.seed, t)
        X, y = samples.X, samples.y
        if config.bootstrap:
            idx = rng.integers(0, len(y), size=len(y))
            X, y = X[idx], y[idx]
        trees.append(grow(X, y, samples.schema, config, rng))
    return Forest.uniform(trees, samples.schema, provenance, check=False)


# -- prediction --------------------------------------------------------------


def route(root: TreeNode, X: np.ndarray) -> list[tuple[TreeNode, np.ndarray]]:
    """Pairs of (leaf, row indices of X reaching it)."""
    out = []
    stack = [(root, np.arange(len(X)))]
    while stack:
        node, idx = stack.pop()
        if node.is_leaf:
            out.append((node, idx))
        elif node.kind == NUMERIC_SPLIT:
            go_left = X[idx, node.feature] <= node.threshold
            stack.append((node.children[1], idx[~go_left]))
            stack.append((node.children[0], idx[go_left]))
        else:
            codes = X[idx, node.feature].astype(np.int64)
            for k, child in enumerate(node.children):
                stack.append((child, idx[codes == k]))
    return out


def partition(node: TreeNode, X: np.ndarray) -> list[np.ndarray]:
    """Row masks of X for each child of a split node."""
    col = X[:, node.feature]
    if node.kind == NUMERIC_SPLIT:
        go_left = col <= node.threshold
        return [go_left, ~go_left]
    codes = col.astype(np.int64)
    return [codes == k for k in range(len(node.children))]


def tree_predict(root: TreeNode, X: np.ndarray) -> np.ndarray:
    out = np.empty(len(X), dtype=np.int64)
    for leaf, idx in route(root, X):
        out[idx] = leaf.label
    return out


def tree_votes(forest: Forest, X: np.ndarray) -> np.ndarray:
    """(n_trees, n_samples) matrix of each tree's predicted class."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    return kernels.route_votes(X, *forest.flat())


def vote_scores(votes: np.ndarray, weights: Sequence[float], n_classes: int) -> np.ndarray:
    n = votes.shape[1]
    scores = np.zeros((n, n_classes))
    rows = np.arange(n)
    for w, v in zip(weights, votes):
        scores[rows, v] += w
    return scores


def argmax_low(scores: np.ndarray) -> np.ndarray:
    top = scores.max(axis=1, keepdims=True)
    return np.argmax(scores >= top - TIE_TOL, axis=1)


def predict_batch(forest: Forest, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Weighted-vote class per row and the per-class vote shares."""
    X = check_vector(forest.schema, X)
    scores = vote_scores(tree_votes(forest, X), forest.weights, forest.schema.n_classes)
    return argmax_low(scores), scores


def predict(forest: Forest, x: Sequence[float] | np.ndarray) -> tuple[int, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise SchemaError("predict takes a single feature vector; use predict_batch")
    labels, scores = predict_batch(forest, x)
    return int(labels[0]), scores[0]
