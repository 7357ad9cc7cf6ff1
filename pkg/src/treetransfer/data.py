"""Column-typed sample tables.

Features are stored in a single float64 matrix. Categorical columns hold the
integer code of the value inside the feature's enumeration, so every routing
and counting kernel can work on one array.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

NUMERIC = "numeric"
CATEGORICAL = "categorical"


class SchemaError(ValueError):
    """Raised when data does not conform to a schema."""


@dataclass(frozen=True)
class Feature:
    name: str
    kind: str = NUMERIC
    categories: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in (NUMERIC, CATEGORICAL):
            raise SchemaError(f"unknown feature kind {self.kind!r}")
        if self.kind == CATEGORICAL and not self.categories:
            raise SchemaError(f"categorical feature {self.name!r} has no categories")

    @property
    def is_numeric(self) -> bool:
        return self.kind == NUMERIC


@dataclass(frozen=True)
class Schema:
    features: tuple[Feature, ...]
    n_classes: int
    class_names: tuple[str, ...] = ()
    label: str = "label"

    def __post_init__(self) -> None:
        if self.n_classes < 1:
            raise SchemaError("class count must be positive")
        if self.class_names and len(self.class_names) != self.n_classes:
            raise SchemaError("class_names length must equal n_classes")

    @classmethod
    def numeric(cls, n_features: int, n_classes: int = 2) -> Schema:
        return cls(tuple(Feature(f"x{i}") for i in range(n_features)), n_classes)

    @property
    def n_features(self) -> int:
        return len(self.features)

    def without(self, index: int) -> Schema:
        kept = self.features[:index] + self.features[index + 1 :]
        return Schema(kept, self.n_classes, self.class_names, self.label)

    def index_of(self, name: str) -> int:
        for i, feat in enumerate(self.features):
            if feat.name == name:
                return i
        raise SchemaError(f"no feature named {name!r}")


@dataclass(frozen=True, eq=False)
class Dataset:
    """Samples ``X`` (n, r) with integer labels ``y`` under ``schema``."""

    schema: Schema
    X: np.ndarray
    y: np.ndarray
    _validated: bool = field(default=False, repr=False)

    def __post_init__(self) -> None:
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.int64)
        if X.ndim != 2:
            X = X.reshape(len(y), -1) if len(y) else X.reshape(0, self.schema.n_features)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if not self._validated:
            validate(self.schema, X, y)

    def __len__(self) -> int:
        return len(self.y)

    def subset(self, index: np.ndarray | Sequence[int]) -> Dataset:
        index = np.asarray(index)
        if index.dtype != bool:
            index = index.astype(np.int64)
        return Dataset(self.schema, self.X[index], self.y[index], _validated=True)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.y, minlength=self.schema.n_classes)

    def drop_feature(self, index: int) -> Dataset:
        X = np.delete(self.X, index, axis=1)
        return Dataset(self.schema.without(index), X, self.y, _validated=True)


def validate(schema: Schema, X: np.ndarray, y: np.ndarray) -> None:
    if X.shape[0] != y.shape[0]:
        raise SchemaError(f"{X.shape[0]} feature rows but {y.shape[0]} labels")
    if X.shape[1] != schema.n_features:
        raise SchemaError(f"expected {schema.n_features} features, got {X.shape[1]}")
    if len(y) and (y.min() < 0 or y.max() >= schema.n_classes):
        raise SchemaError(f"labels must lie in [0, {schema.n_classes})")
    for j, feat in enumerate(schema.features):
        col = X[:, j]
        if feat.is_numeric:
            if not np.all(np.isfinite(col)):
                raise SchemaError(f"non-finite value in numeric feature {feat.name!r}")
        else:
            k = len(feat.categories)
            if np.any((col < 0) | (col >= k) | (col != np.floor(col))):
                raise SchemaError(f"value outside enumeration of {feat.name!r}")


def check_vector(schema: Schema, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    validate(schema, x, np.zeros(len(x), dtype=np.int64))
    return x
