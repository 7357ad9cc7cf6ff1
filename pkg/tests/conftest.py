import numpy as np
import pytest

from treetransfer.data import CATEGORICAL, Dataset, Feature, Schema
from treetransfer.forest import InductionConfig, build_forest


def random_dataset(rng, n_rows=None, n_classes=None, with_categorical=True):
    n_rows = n_rows or int(rng.integers(2, 40))
    n_classes = n_classes or int(rng.integers(2, 4))
    features = []
    cols = []
    for j in range(int(rng.integers(1, 4))):
        if with_categorical and rng.random() < 0.3:
            k = int(rng.integers(2, 4))
            features.append(Feature(f"c{j}", CATEGORICAL, tuple(f"v{i}" for i in range(k))))
            cols.append(rng.integers(0, k, n_rows).astype(float))
        else:
            features.append(Feature(f"x{j}"))
            # coarse grid so duplicate values occur
            cols.append(np.round(rng.random(n_rows), int(rng.integers(1, 3))))
    schema = Schema(tuple(features), n_classes)
    return Dataset(schema, np.column_stack(cols), rng.integers(0, n_classes, n_rows))


def random_forest(rng, trees=3, **kw):
    data = random_dataset(rng, **kw)
    config = InductionConfig(tree_count=trees, seed=int(rng.integers(0, 2**31)))
    return build_forest(data, config), data


def box_data(rng, n, lo=(0.2, 0.2, 0.2), hi=(0.8, 0.8, 0.8)):
    X = rng.random((n, 3))
    y = np.all((X >= lo) & (X <= hi), axis=1).astype(np.int64)
    return Dataset(Schema.numeric(3, 2), X, y)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = []


def record(criterion, ok, detail):
    status = "SKIP" if ok is None else "PASS" if ok else "FAIL"
    line = f"[{status}] criterion {criterion}: {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
