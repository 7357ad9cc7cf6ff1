"""Non-transfer benchmarks and the simple tree-based transfer baselines."""

from __future__ import annotations

import numpy as np

from .data import Dataset, SchemaError
from .forest import (
    Forest,
    InductionConfig,
    LabelDistribution,
    TreeNode,
    build_forest,
    partition,
    tree_votes,
)
from .ser import ser_trees

WEIGHT_FLOOR = 1e-6


def _check(forest: Forest, target: Dataset) -> None:
    if target.schema != forest.schema:
        raise SchemaError("target samples do not match the forest schema")


def src_only(forest: Forest) -> Forest:
    return forest


def tgt_only(target: Dataset, config: InductionConfig) -> Forest:
    return build_forest(target, config, provenance="tgt_only")


def _relabel(node: TreeNode, X: np.ndarray, y: np.ndarray, n_classes: int) -> TreeNode:
    if len(y) == 0:
        return node
    if node.is_leaf:
        return TreeNode.leaf(LabelDistribution.from_labels(y, n_classes))
    children = tuple(
        _relabel(c, X[m], y[m], n_classes) for c, m in zip(node.children, partition(node, X))
    )
    return TreeNode(
        node.kind,
        feature=node.feature,
        threshold=node.threshold,
        children=children,
        retained_left=node.retained_left,
        retained_right=node.retained_right,
    )


def relabel(forest: Forest, target: Dataset) -> Forest:
    """Replace every reached leaf's distribution with its target samples' distribution."""
    _check(forest, target)
    n_classes = forest.schema.n_classes
    trees = tuple(_relabel(t, target.X, target.y, n_classes) for t in forest.trees)
    return Forest(trees, forest.weights, forest.schema, "relabel", check=False)


def bias(forest: Forest, target: Dataset, scheme: str = "accuracy", temperature: float = 0.1) -> Forest:
    """Reweight trees toward those that are accurate on the target samples.

    ``"accuracy"``: weight proportional to accuracy, floored at 1e-6.
    ``"softmax"``: weight proportional to exp(-error / temperature).
    """
    _check(forest, target)
    if len(target) == 0:
        return Forest(forest.trees, forest.weights, forest.schema, f"bias:{scheme}", check=False)
    votes = tree_votes(forest, target.X)
    accuracy = (votes == target.y[None, :]).mean(axis=1)
    if scheme == "accuracy":
        raw = np.maximum(accuracy, WEIGHT_FLOOR)
    elif scheme == "softmax":
        z = -(1.0 - accuracy) / temperature
        raw = np.exp(z - z.max())
    else:
        raise ValueError(f"unknown bias scheme {scheme!r}")
    weights = raw / raw.sum()
    return Forest(forest.trees, tuple(weights), forest.schema, f"bias:{scheme}", check=False)


def prune(forest: Forest, target: Dataset, config: InductionConfig | None = None) -> Forest:
    """Bottom-up reduced-error pruning on the target samples (no expansion)."""
    _check(forest, target)
    config = config or InductionConfig()
    trees = [t for t, _ in ser_trees(forest, target, config, expand=False)]
    return Forest(tuple(trees), forest.weights, forest.schema, "prune", check=False)
