"""CSV ingestion, domain splits and stratified target sampling."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .data import CATEGORICAL, NUMERIC, Dataset, Feature, Schema, SchemaError


class ConfigError(ValueError):
    """The requested columns or rule do not fit the data."""


class CsvError(SchemaError):
    def __init__(self, message: str, line: int | None = None, column: str | None = None) -> None:
        self.line = line
        self.column = column
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


class DegenerateSplitError(ValueError):
    pass


def _natural_key(value: str):
    try:
        return (0, float(value), value)
    except ValueError:
        return (1, 0.0, value)


def _read(path: str | Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise CsvError("file is empty", 1) from None
        rows = []
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise CsvError(f"expected {len(header)} cells, got {len(row)}", reader.line_num)
            rows.append((reader.line_num, [c.strip() for c in row]))
    return header, rows


def load_csv(
    path: str | Path,
    label: str | None = None,
    categorical: Iterable[str] = (),
    schema: Schema | None = None,
) -> Dataset:
    """Read a headed CSV file.

    Without ``schema`` every column other than ``label`` is numeric unless
    named in ``categorical``; enumerations and class names are the sorted
    observed values. With ``schema`` the columns, enumerations and classes of
    an existing model are reused and unseen values are errors.
    """
    header, rows = _read(path)
    if schema is not None:
        label = label or schema.label
    if not label:
        raise ConfigError("no label column given")
    if label not in header:
        raise ConfigError(f"label column {label!r} not in header")
    label_col = header.index(label)

    if schema is None:
        categorical = set(categorical)
        unknown = categorical - set(header)
        if unknown:
            raise ConfigError(f"categorical columns not in header: {sorted(unknown)}")
        if label in categorical:
            raise ConfigError("the label column cannot also be a feature")
        features = []
        for j, name in enumerate(header):
            if j == label_col:
                continue
            if name in categorical:
                values = sorted({r[j] for _, r in rows}, key=_natural_key)
                features.append(Feature(name, CATEGORICAL, tuple(values)))
            else:
                features.append(Feature(name, NUMERIC))
        classes = tuple(sorted({r[label_col] for _, r in rows}, key=_natural_key))
        if not classes:
            raise CsvError("no data rows")
        schema = Schema(tuple(features), len(classes), classes, label)
    elif not schema.class_names:
        raise ConfigError("the schema carries no class names")

    cols = []
    for feat in schema.features:
        if feat.name not in header:
            raise ConfigError(f"column {feat.name!r} not in header")
        cols.append(header.index(feat.name))

    X = np.empty((len(rows), schema.n_features), dtype=np.float64)
    y = np.empty(len(rows), dtype=np.int64)
    class_index = {c: i for i, c in enumerate(schema.class_names)}
    codes = [
        {v: k for k, v in enumerate(f.categories)} if not f.is_numeric else None for f in schema.features
    ]
    for i, (line, row) in enumerate(rows):
        for j, (feat, col) in enumerate(zip(schema.features, cols)):
            cell = row[col]
            if feat.is_numeric:
                try:
                    X[i, j] = float(cell)
                except ValueError:
                    raise CsvError(f"cannot parse {cell!r} as a number", line, feat.name) from None
                if not np.isfinite(X[i, j]):
                    raise CsvError(f"non-finite value {cell!r}", line, feat.name)
            else:
                try:
                    X[i, j] = codes[j][cell]
                except KeyError:
                    raise CsvError(f"unknown category {cell!r}", line, feat.name) from None
        try:
            y[i] = class_index[row[label_col]]
        except KeyError:
            raise CsvError(f"unknown label {row[label_col]!r}", line, label) from None
    return Dataset(schema, X, y, _validated=True)


def write_csv(data: Dataset, path: str | Path) -> None:
    schema = data.schema
    names = schema.class_names or tuple(str(c) for c in range(schema.n_classes))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f.name for f in schema.features] + [schema.label])
        for x, label in zip(data.X, data.y):
            cells = [
                repr(float(v)) if f.is_numeric else f.categories[int(v)] for f, v in zip(schema.features, x)
            ]
            w.writerow(cells + [names[label]])


@dataclass(frozen=True)
class SplitRule:
    """How a feature partitions rows into source and target.

    ``kind`` is ``"value"`` (categorical; rows equal to ``value`` go to the
    target), ``"threshold"`` (rows above ``value`` go to the target),
    ``"median"`` or ``"class_median"`` (threshold at the median of the
    feature, overall or within each class).
    """

    feature: str
    kind: str = "median"
    value: str | float | None = None

    KINDS = ("value", "threshold", "median", "class_median")

    def __post_init__(self) -> None:
        if self.kind not in self.KINDS:
            raise ConfigError(f"unknown split rule {self.kind!r}")
        if self.kind in ("value", "threshold") and self.value is None:
            raise ConfigError(f"split rule {self.kind!r} needs a value")

    @classmethod
    def parse(cls, feature: str, text: str) -> SplitRule:
        """``median``, ``class_median``, ``value:V`` or ``threshold:T``."""
        kind, _, value = text.partition(":")
        kind = kind.replace("-", "_")
        if kind == "threshold":
            try:
                return cls(feature, kind, float(value))
            except ValueError:
                raise ConfigError(f"bad threshold {value!r}") from None
        return cls(feature, kind, value if kind == "value" else None)


def split_by_feature(data: Dataset, rule: SplitRule) -> tuple[Dataset, Dataset]:
    """Partition rows into (source, target) and drop the split feature from both."""
    j = data.schema.index_of(rule.feature)
    feat = data.schema.features[j]
    col = data.X[:, j]
    if rule.kind == "value":
        if feat.is_numeric:
            raise ConfigError(f"value rule on numeric feature {feat.name!r}")
        if rule.value not in feat.categories:
            raise ConfigError(f"{rule.value!r} is not a category of {feat.name!r}")
        to_target = col == feat.categories.index(rule.value)
    else:
        if not feat.is_numeric:
            raise ConfigError(f"threshold rule on categorical feature {feat.name!r}")
        if rule.kind == "threshold":
            to_target = col > float(rule.value)
        elif rule.kind == "median":
            to_target = col > np.median(col) if len(col) else np.zeros(0, dtype=bool)
        else:
            to_target = np.zeros(len(col), dtype=bool)
            for c in np.unique(data.y):
                rows = data.y == c
                to_target[rows] = col[rows] > np.median(col[rows])
    if to_target.all() or not to_target.any():
        raise DegenerateSplitError(f"degenerate split on {feat.name!r}: one side is empty")
    source = data.subset(np.flatnonzero(~to_target)).drop_feature(j)
    target = data.subset(np.flatnonzero(to_target)).drop_feature(j)
    return source, target


def stratified_sample(
    data: Dataset, fraction: float, rng: np.random.Generator
) -> tuple[Dataset, Dataset]:
    """Draw round(fraction * n_c) rows of each class c, at least one, as train.

    Returns (train, test); the test slice is every remaining row.
    """
    if not 0 < fraction <= 1:
        raise ConfigError("fraction must lie in (0, 1]")
    chosen = []
    for c in range(data.schema.n_classes):
        rows = np.flatnonzero(data.y == c)
        if rows.size == 0:
            continue
        k = min(rows.size, max(1, int(np.floor(fraction * rows.size + 0.5))))
        chosen.append(rng.choice(rows, size=k, replace=False))
    if not chosen:
        raise ConfigError("sampling selected no rows")
    train = np.sort(np.concatenate(chosen))
    test = np.setdiff1d(np.arange(len(data)), train)
    return data.subset(train), data.subset(test)
