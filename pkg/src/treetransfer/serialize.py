"""Versioned JSON model files.

Distributions are written as integer counts and thresholds as shortest
round-trip float reprs, so ``deserialize(serialize(f)) == f`` holds exactly.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from .data import Feature, Schema
from .forest import (
    CATEGORICAL_SPLIT,
    LEAF,
    NUMERIC_SPLIT,
    Forest,
    LabelDistribution,
    TreeNode,
)

FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    """Malformed model document; ``position`` is a char offset or a JSON path."""

    def __init__(self, message: str, position: int | str | None = None) -> None:
        self.position = position
        if position is not None:
            message = f"{message} (at {position})"
        super().__init__(message)


def _dist(d: LabelDistribution) -> dict:
    return {"counts": list(d.counts)}


def _node_to_json(node: TreeNode) -> dict:
    if node.is_leaf:
        return {"kind": LEAF, "leaf_counts": list(node.leaf_dist.counts)}
    out: dict[str, Any] = {"kind": node.kind, "feature": node.feature}
    if node.kind == NUMERIC_SPLIT:
        out["threshold"] = node.threshold
        if node.retained_left is not None:
            out["retained_left"] = _dist(node.retained_left)
            out["retained_right"] = _dist(node.retained_right)
    out["children"] = [_node_to_json(c) for c in node.children]
    return out


def forest_to_json(forest: Forest) -> dict:
    schema = forest.schema
    return {
        "version": FORMAT_VERSION,
        "schema": {
            "n_classes": schema.n_classes,
            "class_names": list(schema.class_names),
            "label": schema.label,
            "features": [
                {"name": f.name, "kind": f.kind, "categories": list(f.categories)}
                for f in schema.features
            ],
        },
        "provenance": forest.provenance,
        "weights": list(forest.weights),
        "trees": [_node_to_json(t) for t in forest.trees],
    }


def serialize(forest: Forest) -> bytes:
    return json.dumps(forest_to_json(forest), separators=(",", ":")).encode("utf-8")


def _get(obj: Any, key: str, path: str) -> Any:
    if not isinstance(obj, dict):
        raise ModelFormatError("expected an object", path)
    if key not in obj:
        raise ModelFormatError(f"missing field {key!r}", path)
    return obj[key]


def _counts(obj: Any, path: str) -> LabelDistribution:
    if not isinstance(obj, list) or not all(isinstance(c, int) and not isinstance(c, bool) for c in obj):
        raise ModelFormatError("counts must be a list of integers", path)
    try:
        return LabelDistribution(tuple(obj))
    except ValueError as exc:
        raise ModelFormatError(str(exc), path) from None


def _node_from_json(obj: Any, path: str) -> TreeNode:
    kind = _get(obj, "kind", path)
    try:
        if kind == LEAF:
            return TreeNode.leaf(_counts(_get(obj, "leaf_counts", path), path + "/leaf_counts"))
        feature = _get(obj, "feature", path)
        if not isinstance(feature, int):
            raise ModelFormatError("feature must be an integer", path + "/feature")
        raw_children = _get(obj, "children", path)
        if not isinstance(raw_children, list):
            raise ModelFormatError("children must be a list", path + "/children")
        children = [_node_from_json(c, f"{path}/children/{i}") for i, c in enumerate(raw_children)]
        if kind == NUMERIC_SPLIT:
            threshold = _get(obj, "threshold", path)
            if not isinstance(threshold, (int, float)) or isinstance(threshold, bool):
                raise ModelFormatError("threshold must be a number", path + "/threshold")
            left = right = None
            if "retained_left" in obj:
                left = _counts(_get(obj["retained_left"], "counts", path + "/retained_left"), path)
                right = _counts(_get(_get(obj, "retained_right", path), "counts", path), path)
            if len(children) != 2:
                raise ModelFormatError("numeric split needs 2 children", path)
            return TreeNode.numeric(feature, float(threshold), children[0], children[1], left, right)
        if kind == CATEGORICAL_SPLIT:
            return TreeNode.categorical(feature, children)
    except ModelFormatError:
        raise
    except ValueError as exc:
        raise ModelFormatError(str(exc), path) from None
    raise ModelFormatError(f"unknown node kind {kind!r}", path)


def forest_from_json(doc: Any) -> Forest:
    version = _get(doc, "version", "$")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model version {version!r}", "$/version")
    raw_schema = _get(doc, "schema", "$")
    try:
        features = tuple(
            Feature(
                _get(f, "name", f"$/schema/features/{i}"),
                _get(f, "kind", f"$/schema/features/{i}"),
                tuple(f.get("categories", ())),
            )
            for i, f in enumerate(_get(raw_schema, "features", "$/schema"))
        )
        schema = Schema(
            features,
            _get(raw_schema, "n_classes", "$/schema"),
            tuple(raw_schema.get("class_names", ())),
            str(raw_schema.get("label", "label")),
        )
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ModelFormatError):
            raise
        raise ModelFormatError(str(exc), "$/schema") from None
    raw_trees = _get(doc, "trees", "$")
    if not isinstance(raw_trees, list):
        raise ModelFormatError("trees must be a list", "$/trees")
    trees = [_node_from_json(t, f"$/trees/{i}") for i, t in enumerate(raw_trees)]
    weights = _get(doc, "weights", "$")
    if not isinstance(weights, list):
        raise ModelFormatError("weights must be a list", "$/weights")
    try:
        return Forest(tuple(trees), tuple(weights), schema, str(_get(doc, "provenance", "$")))
    except (ValueError, TypeError) as exc:
        raise ModelFormatError(str(exc), "$") from None


def deserialize(data: bytes | str) -> Forest:
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ModelFormatError("model stream is not UTF-8", exc.start) from None
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"malformed model stream: {exc.msg}", exc.pos) from None
    return forest_from_json(doc)


def save(forest: Forest, path: str | Path) -> None:
    Path(path).write_bytes(serialize(forest))


def load(path: str | Path) -> Forest:
    return deserialize(Path(path).read_bytes())
