import numpy as np
import pytest

from rwn.dataset import CATEGORICAL, NUMERIC, ColumnSchema, Dataset, StandardizedView
from rwn.distance import make_spec


def numeric_dataset(points) -> Dataset:
    """Dataset whose numeric columns are exactly the given coordinates."""
    points = np.asarray(points, dtype=np.float64)
    schema = tuple(ColumnSchema(f"x{j}", NUMERIC) for j in range(points.shape[1]))
    return Dataset(schema, [points[:, j] for j in range(points.shape[1])])


def spec_from_points(points, weights=None):
    """DistanceSpec over raw coordinates, bypassing z-scoring.

    Lets hand-enumerated distance examples use their literal values.
    """
    points = np.asarray(points, dtype=np.float64)
    n, p = points.shape
    d = numeric_dataset(points)
    view = StandardizedView(
        source=d,
        numeric_names=tuple(f"x{j}" for j in range(p)),
        values=points.copy(),
        means=np.zeros(p),
        sds=np.ones(p),
        categorical_names=(),
        codes=np.empty((n, 0), dtype=np.int64),
        category_counts=(),
    )
    return make_spec(view, weights)


LABELS = ("red", "green", "blue")


def random_mixed_dataset(g: np.random.Generator, n=None, p_num=None, p_cat=None, missing=0.0) -> Dataset:
    """Random mixed-type dataset for property tests; missing = per-cell probability."""
    n = int(g.integers(2, 12)) if n is None else n
    p_num = int(g.integers(1, 4)) if p_num is None else p_num
    p_cat = int(g.integers(0, 3)) if p_cat is None else p_cat
    schema = []
    rows = [[] for _ in range(n)]
    for j in range(p_num):
        schema.append(ColumnSchema(f"num{j}", NUMERIC))
        col = g.normal(size=n) * float(g.uniform(0.5, 20))
        for i in range(n):
            rows[i].append(None if g.random() < missing else float(col[i]))
    for j in range(p_cat):
        k = int(g.integers(2, len(LABELS) + 1))
        cats = LABELS[:k]
        schema.append(ColumnSchema(f"cat{j}", CATEGORICAL, cats))
        for i in range(n):
            rows[i].append(None if g.random() < missing else cats[int(g.integers(0, k))])
    return Dataset.from_rows(tuple(schema), rows)


@pytest.fixture
def rng_np():
    return np.random.default_rng(20240817)
