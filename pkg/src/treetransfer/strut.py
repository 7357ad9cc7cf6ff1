"""Structure transfer: keep the tree, refit its numeric thresholds.

Each numeric node gets the threshold whose induced left/right label
distributions on the target samples best match the distributions retained at
induction time (divergence gain), restricted to thresholds that are local
maxima of information gain. The search also runs with the retained
distributions reversed; if that matches better, the children are swapped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .data import Dataset, SchemaError
from .forest import (
    CATEGORICAL_SPLIT,
    TIE_TOL,
    Forest,
    LabelDistribution,
    TreeNode,
    partition,
)

CRITERIA = ("both", "ig", "dg")
_CRITERION_CODE = {"both": kernels.BOTH, "ig": kernels.IG_ONLY, "dg": kernels.DG_ONLY}


class DegenerateFeatureError(ValueError):
    pass


class MissingRetainedError(ValueError):
    pass


@dataclass(frozen=True)
class ThresholdSearchResult:
    threshold: float
    dg: float
    candidates_considered: int


def _as_probs(d) -> np.ndarray:
    if isinstance(d, LabelDistribution):
        return d.probs
    return np.asarray(d, dtype=np.float64)


def jsd_rows(P: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Jensen-Shannon divergence (bits) of each row of P against q."""
    P = np.atleast_2d(np.asarray(P, dtype=np.float64))
    q = np.broadcast_to(np.asarray(q, dtype=np.float64), P.shape)
    M = 0.5 * (P + q)
    with np.errstate(divide="ignore", invalid="ignore"):
        kp = np.where(P > 0, P * np.log2(np.where(P > 0, P, 1) / np.where(M > 0, M, 1)), 0.0)
        kq = np.where(q > 0, q * np.log2(np.where(q > 0, q, 1) / np.where(M > 0, M, 1)), 0.0)
    out = 0.5 * (kp.sum(axis=1) + kq.sum(axis=1))
    return np.clip(out, 0.0, 1.0)


def jsd(p, q) -> float:
    p, q = _as_probs(p), _as_probs(q)
    if p.shape != q.shape:
        raise ValueError(f"distribution lengths differ: {p.size} vs {q.size}")
    return float(jsd_rows(p[None, :], q)[0])


def _dg_rows(left: np.ndarray, right: np.ndarray, q_left: np.ndarray, q_right: np.ndarray) -> np.ndarray:
    n_left = left.sum(axis=1)
    n_right = right.sum(axis=1)
    n = n_left + n_right
    p_left = left / np.where(n_left > 0, n_left, 1)[:, None]
    p_right = right / np.where(n_right > 0, n_right, 1)[:, None]
    return 1.0 - (n_left / n) * jsd_rows(p_left, q_left) - (n_right / n) * jsd_rows(p_right, q_right)


def divergence_gain(samples: Dataset, feature: int, tau: float, q_left, q_right) -> float:
    """One minus the size-weighted JSD between induced and retained side distributions."""
    if len(samples) == 0:
        raise ValueError("divergence gain of an empty sample set")
    if not samples.schema.features[feature].is_numeric:
        raise ValueError("divergence gain requires a numeric feature")
    c = samples.schema.n_classes
    go_left = samples.X[:, feature] <= tau
    left = np.bincount(samples.y[go_left], minlength=c)[None, :].astype(np.float64)
    right = np.bincount(samples.y[~go_left], minlength=c)[None, :].astype(np.float64)
    return float(_dg_rows(left, right, _as_probs(q_left), _as_probs(q_right))[0])


def search_threshold(
    values: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    q_left: np.ndarray,
    q_right: np.ndarray,
    criterion: str = "both",
) -> ThresholdSearchResult:
    code = _CRITERION_CODE[criterion]
    threshold, dg, m = kernels.refit_search(
        np.ascontiguousarray(values, dtype=np.float64),
        np.ascontiguousarray(y, dtype=np.int64),
        n_classes,
        np.ascontiguousarray(q_left, dtype=np.float64),
        np.ascontiguousarray(q_right, dtype=np.float64),
        code,
    )
    if m == 0:
        raise DegenerateFeatureError("degenerate feature")
    return ThresholdSearchResult(float(threshold), float(dg), int(m))


def threshold_selection(
    samples: Dataset, feature: int, q_left, q_right, criterion: str = "both"
) -> ThresholdSearchResult:
    """Best threshold for ``feature`` on ``samples`` given retained distributions."""
    if len(samples) == 0:
        raise ValueError("threshold selection on an empty sample set")
    if not samples.schema.features[feature].is_numeric:
        raise ValueError("threshold selection requires a numeric feature")
    return search_threshold(
        samples.X[:, feature],
        samples.y,
        samples.schema.n_classes,
        _as_probs(q_left),
        _as_probs(q_right),
        criterion,
    )


def _refit(node: TreeNode, X: np.ndarray, y: np.ndarray, n_classes: int, criterion: str) -> TreeNode:
    if node.retained_left is None or node.retained_right is None:
        raise MissingRetainedError("model lacks STRUT metadata")
    values = X[:, node.feature]
    ql, qr = node.retained_left.probs, node.retained_right.probs
    try:
        first = search_threshold(values, y, n_classes, ql, qr, criterion)
    except DegenerateFeatureError:
        return node
    if criterion == "ig":
        # information gain is blind to orientation, so no swap test
        return TreeNode.numeric(
            node.feature, first.threshold, *node.children, node.retained_left, node.retained_right
        )
    second = search_threshold(values, y, n_classes, qr, ql, criterion)
    if second.dg > first.dg + TIE_TOL:
        left, right = node.children
        return TreeNode.numeric(
            node.feature, second.threshold, right, left, node.retained_right, node.retained_left
        )
    return TreeNode.numeric(
        node.feature, first.threshold, *node.children, node.retained_left, node.retained_right
    )


def _strut(node: TreeNode, X: np.ndarray, y: np.ndarray, n_classes: int, criterion: str) -> TreeNode:
    if len(y) == 0:
        if node.is_leaf:
            return node
        # unreachable in the target domain
        return TreeNode.leaf(node.subtree_votes())
    if node.is_leaf:
        return TreeNode.leaf(LabelDistribution.from_labels(y, n_classes))
    if node.kind != CATEGORICAL_SPLIT:
        node = _refit(node, X, y, n_classes, criterion)
    children = tuple(
        _strut(child, X[mask], y[mask], n_classes, criterion)
        for child, mask in zip(node.children, partition(node, X))
    )
    return TreeNode(
        node.kind,
        feature=node.feature,
        threshold=node.threshold,
        children=children,
        retained_left=node.retained_left,
        retained_right=node.retained_right,
    )


def strut_tree(root: TreeNode, target: Dataset, criterion: str = "both") -> TreeNode:
    """Refit ``root`` to ``target``.

    ``criterion`` selects the full search (``"both"``) or the single-measure
    variants ``"ig"`` (global IG maximum, no swap) and ``"dg"`` (global DG
    maximum over all candidates).
    """
    if criterion not in CRITERIA:
        raise ValueError(f"unknown criterion {criterion!r}")
    return _strut(root, target.X, target.y, target.schema.n_classes, criterion)


def strut_forest(forest: Forest, target: Dataset, criterion: str = "both") -> Forest:
    if target.schema != forest.schema:
        raise SchemaError("target samples do not match the forest schema")
    trees = [strut_tree(t, target, criterion) for t in forest.trees]
    return Forest.uniform(trees, forest.schema, "strut", check=False)
