"""Structure expansion/reduction.

A depth-first pass over a source tree: every leaf reached by target samples is
replaced by a tree grown on those samples, and on the way back up any subtree
that misclassifies more of its routed samples than a single majority leaf
would is collapsed into that leaf.

When expansion is on and every leaf carries its target majority label, a
subtree can never err more than its majority leaf, so the reduction test only
fires in reduction-only mode (the pruning baseline).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .data import Dataset, SchemaError
from .forest import (
    Forest,
    InductionConfig,
    LabelDistribution,
    TreeNode,
    derive_rng,
    grow,
    partition,
    tree_predict,
)

# stream tag separating expansion seeds from forest induction seeds
_SER_STREAM = 1


@dataclass
class SerStats:
    expanded_leaves: int = 0
    reduced_nodes: int = 0
    nodes_before: int = 0
    nodes_after: int = 0


def leaf_error(y: np.ndarray, n_classes: int) -> int:
    """Errors of the majority label on ``y``."""
    if len(y) == 0:
        return 0
    return int(len(y) - np.bincount(y, minlength=n_classes).max())


def subtree_error(node: TreeNode, X: np.ndarray, y: np.ndarray) -> int:
    if len(y) == 0:
        return 0
    return int(np.count_nonzero(tree_predict(node, X) != y))


class _Pass:
    def __init__(self, schema, config: InductionConfig, tree_index: int, expand: bool):
        self.schema = schema
        self.config = config
        self.tree_index = tree_index
        self.expand = expand
        self.stats = SerStats()

    def visit(self, node: TreeNode, X: np.ndarray, y: np.ndarray, path: tuple[int, ...]):
        """Returns the transformed node and its error count on (X, y)."""
        n = len(y)
        if node.is_leaf:
            if n == 0 or not self.expand:
                return node, int(np.count_nonzero(y != node.label))
            rng = derive_rng(self.config.seed, _SER_STREAM, self.tree_index, *path)
            grown = grow(X, y, self.schema, self.config, rng)
            if not grown.is_leaf:
                self.stats.expanded_leaves += 1
            return grown, int(np.count_nonzero(tree_predict(grown, X) != y))

        children = []
        errors = 0
        for i, (child, mask) in enumerate(zip(node.children, partition(node, X))):
            new_child, child_errors = self.visit(child, X[mask], y[mask], path + (i,))
            children.append(new_child)
            errors += child_errors

        majority_errors = leaf_error(y, self.schema.n_classes)
        if majority_errors < errors:
            self.stats.reduced_nodes += 1
            return TreeNode.leaf(LabelDistribution.from_labels(y, self.schema.n_classes)), majority_errors
        return replace(node, children=tuple(children)), errors


def ser_tree(
    root: TreeNode,
    target: Dataset,
    config: InductionConfig,
    tree_index: int = 0,
    expand: bool = True,
) -> tuple[TreeNode, SerStats]:
    """Run one expansion/reduction pass of ``root`` over ``target``.

    With ``expand=False`` only the bottom-up reduction runs and leaves keep
    their source distributions.
    """
    p = _Pass(target.schema, config, tree_index, expand)
    out, _ = p.visit(root, target.X, target.y, ())
    p.stats.nodes_before = root.n_nodes
    p.stats.nodes_after = out.n_nodes
    return out, p.stats


def ser_trees(
    forest: Forest, target: Dataset, config: InductionConfig, expand: bool = True
) -> list[tuple[TreeNode, SerStats]]:
    if target.schema != forest.schema:
        raise SchemaError("target samples do not match the forest schema")
    return [ser_tree(t, target, config, i, expand) for i, t in enumerate(forest.trees)]


def ser_forest(forest: Forest, target: Dataset, config: InductionConfig) -> Forest:
    trees = [t for t, _ in ser_trees(forest, target, config)]
    return Forest.uniform(trees, forest.schema, "ser", check=False)
